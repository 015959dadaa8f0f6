#include "bli/common.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace bli {

namespace log {
namespace {
std::atomic<Level> g_level{Level::kInfo};
std::mutex g_mutex;

void emit(Level at, std::string_view tag, std::string_view message) {
  if (at < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << tag << message << '\n';
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }
void debug(std::string_view message) { emit(Level::kDebug, "[debug] ", message); }
void info(std::string_view message) { emit(Level::kInfo, "[info] ", message); }
void warn(std::string_view message) { emit(Level::kWarning, "[warn] ", message); }

}  // namespace log

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n_tasks, unsigned threads,
                  const std::function<void(std::size_t, unsigned)>& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n_tasks));
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&](unsigned worker) {
    try {
      for (std::size_t t = next++; t < n_tasks; t = next++) fn(t, worker);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_tasks;
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
  }
  if (failure) std::rethrow_exception(failure);
}

std::string format_shortest(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvariantError("cannot format floating-point value");
  return std::string(buf, end);
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace bli
