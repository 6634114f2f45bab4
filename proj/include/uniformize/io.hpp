#pragma once

// Deterministic result emission: CSV/JSON tables with bit-faithful double
// formatting, config hashing, and a small ordered worker pool.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "uniformize/core.hpp"

namespace unf {

using Json = nlohmann::ordered_json;

// 17 significant digits round-trips a double exactly; '.' decimal always.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_long(long v) { return std::to_string(v); }

struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    require(row.size() == columns.size(), "ResultTable: row width mismatch");
    rows.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out;
    for (size_t c = 0; c < columns.size(); ++c) {
      out += columns[c];
      out += (c + 1 < columns.size()) ? ',' : '\n';
    }
    for (const auto& row : rows)
      for (size_t c = 0; c < row.size(); ++c) {
        out += row[c];
        out += (c + 1 < row.size()) ? ',' : '\n';
      }
    return out;
  }

  Json to_json() const {
    Json j;
    j["table"] = name;
    j["columns"] = columns;
    j["rows"] = rows;
    return j;
  }
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot open output file " + path.string());
  out << content;
  require(bool(out), "failed writing output file " + path.string());
}

// Runs jobs 0..count-1 on up to `threads` workers; result order is by job
// index, so the merge is deterministic regardless of scheduling.
template <typename Result, typename Fn>
std::vector<Result> ordered_parallel(long count, int threads, Fn&& fn) {
  std::vector<Result> results;
  results.resize(size_t(count));
  if (count == 0) return results;
  threads = int(std::max<long>(1, std::min<long>(threads, count)));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[size_t(i)] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace unf
