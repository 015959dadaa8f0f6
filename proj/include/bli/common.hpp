#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bli {

using WordId = std::int32_t;

// Row-major storage so that a word vector is a contiguous slice.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or arguments. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// A violated internal invariant. CLI exit code 4.
class InvariantError : public Error {
 public:
  using Error::Error;
};

namespace log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

void set_level(Level level);
Level level();
void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);

}  // namespace log

// Number of workers for a requested thread count; 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

// Runs fn(task, worker) for task in [0, n_tasks) on up to `threads` workers.
// Tasks are claimed dynamically, so callers must make results independent of
// which worker ran which task.
void parallel_for(std::size_t n_tasks, unsigned threads,
                  const std::function<void(std::size_t task, unsigned worker)>& fn);

// Shortest decimal text that parses back to exactly `value`.
std::string format_shortest(double value);

// Strips one trailing '\r', for files written on Windows.
std::string_view chomp(std::string_view line);

}  // namespace bli
