#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace adex {

// Writes text files atomically: content goes to a sibling temp file which is
// renamed over the target once complete.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const std::filesystem::path& target)
      : target_(target), tmp_(target.string() + ".tmp") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open " + tmp_.string() + " for writing");
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed for " + tmp_.string());
    out_.close();
    std::filesystem::rename(tmp_, target_);
    committed_ = true;
  }

  ~AtomicFileWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

 private:
  std::filesystem::path target_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

// Shortest-exact decimal rendering for CSV cells: round-trips doubles and
// keeps reruns byte-identical.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace adex
