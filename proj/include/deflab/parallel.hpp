#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "deflab/grid.hpp"

namespace deflab {

/// Default number of paths per block. Block boundaries depend only on n_paths,
/// never on the thread count, so per-block results merged in block order are
/// identical for any number of workers.
inline constexpr std::size_t kBlockPaths = 1024;

inline std::vector<PathRange> path_blocks(std::size_t n_paths, std::size_t block = kBlockPaths) {
  std::vector<PathRange> out;
  for (std::size_t first = 0; first < n_paths; first += block)
    out.push_back({first, std::min(block, n_paths - first)});
  return out;
}

/// Runs f(block_index, range) for every block on `threads` workers. The first
/// exception thrown by any block is rethrown after all workers stop.
template <class F>
void for_each_block(std::size_t n_paths, unsigned threads, F&& f, std::size_t block = kBlockPaths) {
  const auto blocks = path_blocks(n_paths, block);
  if (threads <= 1 || blocks.size() <= 1) {
    for (std::size_t b = 0; b < blocks.size(); ++b) f(b, blocks[b]);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks.size() || failed.load()) return;
      try {
        f(b, blocks[b]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(blocks.size()));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace deflab
