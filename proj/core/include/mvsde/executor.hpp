#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mvsde {

/// Half-open particle index range handed to a worker.
struct IndexRange {
    std::size_t begin;
    std::size_t end;
    std::size_t chunk; ///< chunk ordinal, ascending in begin
};

/**
 * Runs a body over [0, n) split into chunks of a fixed size. Chunk boundaries
 * depend only on n and chunk_size(), never on the number of threads, so any
 * per-chunk partial result combined in chunk order is schedule independent.
 */
class Executor {
public:
    virtual ~Executor() = default;

    [[nodiscard]] virtual std::size_t chunk_size() const = 0;
    [[nodiscard]] virtual unsigned threads() const = 0;
    virtual void for_each_chunk(std::size_t n, const std::function<void(IndexRange)>& body) = 0;

    [[nodiscard]] std::size_t chunk_count(std::size_t n) const {
        return (n + chunk_size() - 1) / chunk_size();
    }
};

class SerialExecutor final : public Executor {
public:
    explicit SerialExecutor(std::size_t chunk_size = 64) : chunk_size_(chunk_size == 0 ? 1 : chunk_size) {}

    [[nodiscard]] std::size_t chunk_size() const override { return chunk_size_; }
    [[nodiscard]] unsigned threads() const override { return 1; }
    void for_each_chunk(std::size_t n, const std::function<void(IndexRange)>& body) override;

private:
    std::size_t chunk_size_;
};

/**
 * Fixed pool of worker threads. The calling thread participates, so a pool of
 * k threads spawns k-1 workers. If bodies throw, the exception of the lowest
 * failing chunk is rethrown after all chunks finished.
 */
class ThreadPool final : public Executor {
public:
    ThreadPool(unsigned threads, std::size_t chunk_size = 64);
    ~ThreadPool() override;
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    [[nodiscard]] std::size_t chunk_size() const override { return chunk_size_; }
    [[nodiscard]] unsigned threads() const override { return threads_; }
    void for_each_chunk(std::size_t n, const std::function<void(IndexRange)>& body) override;

private:
    void worker_loop();
    void drain();

    unsigned threads_;
    std::size_t chunk_size_;
    std::vector<std::thread> workers_;

    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    bool stopping_ = false;
    std::size_t generation_ = 0;
    std::size_t active_ = 0;

    // current job
    const std::function<void(IndexRange)>* body_ = nullptr;
    std::size_t n_ = 0;
    std::size_t chunks_ = 0;
    std::size_t next_chunk_ = 0;
    std::size_t failed_chunk_ = 0;
    std::exception_ptr error_;
};

} // namespace mvsde
