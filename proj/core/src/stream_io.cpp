/*
   Copyright 2026 The f2fnet Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "f2f/stream_io.hpp"

#include "f2f/wire.hpp"

#include <memory>

namespace f2f {

namespace {

struct ReadState {
    Scheduler* scheduler = nullptr;
    StreamPtr stream;
    std::size_t count = 0;
    TimerId timer = 0;
    bool finished = false;
    ReadCallback done;

    void finish(std::optional<Bytes> result) {
        if (finished) return;
        finished = true;
        scheduler->cancel(timer);
        stream->set_on_readable(nullptr);
        auto cb = std::move(done);
        cb(std::move(result));
    }

    void poll() {
        if (finished) return;
        if (stream->readable() >= count) {
            finish(stream->read(count));
        } else if (stream->at_eof() || stream->was_reset()) {
            finish(std::nullopt);
        }
    }
};

struct WriteState {
    StreamPtr stream;
    Bytes data;
    std::size_t offset = 0;
    bool finished = false;
    std::function<void(bool)> done;

    void finish(bool ok) {
        if (finished) return;
        finished = true;
        stream->set_on_writable(nullptr);
        auto cb = std::move(done);
        cb(ok);
    }

    void pump() {
        while (!finished && offset < data.size()) {
            auto view = ByteView{data}.subspan(offset);
            auto result = stream->write(view.first(std::min(view.size(), stream->writable())));
            if (result.status != WriteStatus::Ok) {
                finish(false);
                return;
            }
            if (result.accepted == 0) return;  // wait for on_writable
            offset += result.accepted;
        }
        finish(true);
    }
};

}  // namespace

void read_exact(Scheduler& scheduler, const StreamPtr& stream, std::size_t count, TimeMs timeout_ms,
                ReadCallback done) {
    auto state = std::make_shared<ReadState>();
    state->scheduler = &scheduler;
    state->stream = stream;
    state->count = count;
    state->done = std::move(done);
    state->timer = scheduler.schedule(timeout_ms, [weak = std::weak_ptr<ReadState>(state)] {
        if (auto s = weak.lock()) s->finish(std::nullopt);
    });
    stream->set_on_readable([state] { state->poll(); });
    // Bytes may already be buffered; answer on the next turn so callers never
    // see their callback before read_exact returns.
    scheduler.schedule(0, [state] { state->poll(); });
}

void read_frame(Scheduler& scheduler, const StreamPtr& stream, TimeMs timeout_ms, ReadCallback done) {
    const auto deadline = scheduler.now() + timeout_ms;
    read_exact(scheduler, stream, 4, timeout_ms,
               [&scheduler, stream, deadline, done = std::move(done)](std::optional<Bytes> header) mutable {
                   if (!header) {
                       done(std::nullopt);
                       return;
                   }
                   std::size_t total = 0;
                   try {
                       total = *wire::peek_frame_length(*header);
                   } catch (const wire::WireError&) {
                       done(std::nullopt);
                       return;
                   }
                   const auto now = scheduler.now();
                   const auto left = deadline > now ? deadline - now : 0;
                   read_exact(scheduler, stream, total - 4, left,
                              [header = std::move(*header), done = std::move(done)](std::optional<Bytes> rest) {
                                  if (!rest) {
                                      done(std::nullopt);
                                      return;
                                  }
                                  Bytes frame = header;
                                  frame.insert(frame.end(), rest->begin(), rest->end());
                                  done(std::move(frame));
                              });
               });
}

void write_all(const StreamPtr& stream, Bytes data, std::function<void(bool)> done) {
    auto state = std::make_shared<WriteState>();
    state->stream = stream;
    state->data = std::move(data);
    state->done = std::move(done);
    stream->set_on_writable([state] { state->pump(); });
    state->pump();
}

}  // namespace f2f
