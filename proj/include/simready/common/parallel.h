#pragma once

#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace simready {

// Fixed-size worker pool. With one worker, loops run inline on the caller.
class WorkerPool {
 public:
  // workers <= 0 selects the hardware concurrency.
  explicit WorkerPool(int workers = 0)
      : workers_(workers > 0 ? workers : tbb::this_task_arena::max_concurrency()) {
    if (workers_ > 1) arena_ = std::make_unique<tbb::task_arena>(workers_);
  }

  int workers() const { return workers_; }

  template <typename F>
  void parallel_for(std::size_t n, std::size_t grain, F&& body) const {
    if (!arena_ || n <= grain) {
      for (std::size_t i = 0; i < n; ++i) body(i);
      return;
    }
    arena_->execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, grain),
                        [&](const tbb::blocked_range<std::size_t>& r) {
                          for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
                        });
    });
  }

 private:
  int workers_;
  std::unique_ptr<tbb::task_arena> arena_;
};

}  // namespace simready
