#ifndef CPDD_PARALLEL_HPP
#define CPDD_PARALLEL_HPP

/** A small persistent thread pool for per-subdomain work batches.  Tasks
 *  are indexed 0..n-1 and pulled from a shared counter; run_batch blocks
 *  until every task finished and rethrows the first task exception. */

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cpdd {

class ThreadPool {
  public:
    explicit ThreadPool(int n_workers) : n_workers_(n_workers < 1 ? 1 : n_workers) {
        for (int w = 1; w < n_workers_; ++w)
            threads_.emplace_back([this] { worker_loop(); });
    }
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;
    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lk(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int size() const { return n_workers_; }

    /** Run task(0) .. task(n_tasks-1), distributing over the workers. */
    void run_batch(int n_tasks, const std::function<void(int)>& task) {
        if (n_tasks <= 0) return;
        if (n_workers_ == 1) {
            for (int i = 0; i < n_tasks; ++i) task(i);
            return;
        }
        std::unique_lock<std::mutex> lk(m_);
        fn_ = &task;
        n_tasks_ = n_tasks;
        next_ = 0;
        done_ = 0;
        error_ = nullptr;
        ++generation_;
        cv_.notify_all();
        run_tasks(lk);
        cv_done_.wait(lk, [&] { return done_ == n_tasks_; });
        fn_ = nullptr;
        n_tasks_ = 0;
        if (error_) {
            std::exception_ptr e = error_;
            error_ = nullptr;
            lk.unlock();
            std::rethrow_exception(e);
        }
    }

  private:
    void worker_loop() {
        std::uint64_t seen = 0;
        std::unique_lock<std::mutex> lk(m_);
        for (;;) {
            cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            run_tasks(lk);
        }
    }

    /** Pull and run tasks; expects the lock held, returns with it held. */
    void run_tasks(std::unique_lock<std::mutex>& lk) {
        while (next_ < n_tasks_) {
            const int i = next_++;
            const std::function<void(int)>* fn = fn_;
            lk.unlock();
            std::exception_ptr err;
            try {
                (*fn)(i);
            } catch (...) {
                err = std::current_exception();
            }
            lk.lock();
            if (err && !error_) error_ = err;
            if (++done_ == n_tasks_) cv_done_.notify_all();
        }
    }

    const int n_workers_;
    std::vector<std::thread> threads_;
    std::mutex m_;
    std::condition_variable cv_, cv_done_;
    const std::function<void(int)>* fn_ = nullptr;
    int n_tasks_ = 0, next_ = 0, done_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

}  // namespace cpdd

#endif  // CPDD_PARALLEL_HPP
