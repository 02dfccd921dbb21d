#include "mvsde/executor.hpp"

#include <algorithm>
#include <limits>

namespace mvsde {

void SerialExecutor::for_each_chunk(std::size_t n, const std::function<void(IndexRange)>& body) {
    const std::size_t chunks = chunk_count(n);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * chunk_size_;
        body({begin, std::min(n, begin + chunk_size_), c});
    }
}

ThreadPool::ThreadPool(unsigned threads, std::size_t chunk_size)
    : threads_(std::max(1u, threads)), chunk_size_(chunk_size == 0 ? 1 : chunk_size) {
    workers_.reserve(threads_ - 1);
    for (unsigned i = 1; i < threads_; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) {
        w.join();
    }
}

void ThreadPool::drain() {
    for (;;) {
        std::size_t c;
        {
            std::lock_guard lock(mutex_);
            if (next_chunk_ >= chunks_) {
                return;
            }
            c = next_chunk_++;
        }
        const std::size_t begin = c * chunk_size_;
        try {
            (*body_)({begin, std::min(n_, begin + chunk_size_), c});
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_ || c < failed_chunk_) {
                error_ = std::current_exception();
                failed_chunk_ = c;
            }
        }
    }
}

void ThreadPool::worker_loop() {
    std::size_t seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) {
                return;
            }
            seen = generation_;
            ++active_;
        }
        drain();
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        done_.notify_all();
    }
}

void ThreadPool::for_each_chunk(std::size_t n, const std::function<void(IndexRange)>& body) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 0) {
        return;
    }
    if (workers_.empty() || chunks == 1) {
        SerialExecutor(chunk_size_).for_each_chunk(n, body);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        body_ = &body;
        n_ = n;
        chunks_ = chunks;
        next_chunk_ = 0;
        error_ = nullptr;
        failed_chunk_ = std::numeric_limits<std::size_t>::max();
        ++generation_;
    }
    wake_.notify_all();
    drain();
    std::exception_ptr error;
    {
        std::unique_lock lock(mutex_);
        done_.wait(lock, [&] { return active_ == 0 && next_chunk_ >= chunks_; });
        body_ = nullptr;
        error = error_;
        error_ = nullptr;
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace mvsde
