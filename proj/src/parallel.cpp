#include "kfhe/parallel.hpp"

#include <memory>

namespace kfhe {

namespace {
thread_local bool t_in_worker = false;
}

ThreadPool::ThreadPool(std::size_t threads) {
    const std::size_t extra = threads > 1 ? threads - 1 : 0;
    workers_.reserve(extra);
    for (std::size_t i = 0; i < extra; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) t.join();
}

void ThreadPool::worker_loop() {
    t_in_worker = true;
    std::size_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t)>* job = nullptr;
        std::size_t count = 0;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            job = job_;
            count = job_count_;
            ++active_;
        }
        for (std::size_t i = next_.fetch_add(1); i < count; i = next_.fetch_add(1)) (*job)(i);
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        done_.notify_all();
    }
}

void ThreadPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (workers_.empty() || count == 1 || t_in_worker) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::lock_guard submit(submit_);
    {
        std::lock_guard lock(mutex_);
        job_ = &fn;
        job_count_ = count;
        next_.store(0);
        ++generation_;
    }
    wake_.notify_all();
    const bool was_worker = t_in_worker;
    t_in_worker = true;
    for (std::size_t i = next_.fetch_add(1); i < count; i = next_.fetch_add(1)) fn(i);
    t_in_worker = was_worker;
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return active_ == 0; });
    job_ = nullptr;
}

namespace {
std::unique_ptr<ThreadPool>& pool_slot() {
    static std::unique_ptr<ThreadPool> pool = std::make_unique<ThreadPool>(1);
    return pool;
}
}  // namespace

ThreadPool& default_pool() { return *pool_slot(); }

void set_default_threads(std::size_t threads) {
    pool_slot() = std::make_unique<ThreadPool>(threads == 0 ? 1 : threads);
}

std::size_t default_threads() { return default_pool().size(); }

}  // namespace kfhe
