#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kfhe {

// Fixed-size worker pool. parallel_for hands out indices dynamically; the
// calling thread takes part. Calls made from inside a worker run inline, so
// nested parallel regions never wait on the pool they are running in.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads = 1);
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return workers_.size() + 1; }

    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t job_count_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t active_ = 0;
    std::size_t generation_ = 0;
    bool stop_ = false;
    std::mutex submit_;
};

// Process-wide pool used by the NTT, kernel and batch layers.
ThreadPool& default_pool();
// Replaces the process-wide pool; not safe while work is in flight.
void set_default_threads(std::size_t threads);
std::size_t default_threads();

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    default_pool().parallel_for(count, fn);
}

}  // namespace kfhe
