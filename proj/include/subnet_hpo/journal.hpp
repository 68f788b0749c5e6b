#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "subnet_hpo/sched.hpp"

namespace subnet_hpo {

/// First line of every journal; identifies the run it belongs to.
struct JournalHeader {
  std::string plan_digest;
  std::string scheduler;
  std::uint64_t seed = 0;
  std::uint64_t fold = 0;
  double budget = 0.0;

  bool operator==(const JournalHeader&) const = default;
};

std::string header_line(const JournalHeader& header);
std::string journal_line(const TrialRecord& record);

/// Throws ParseError.
JournalHeader parse_header_line(const std::string& line);
TrialRecord parse_journal_line(const std::string& line);

struct Journal {
  JournalHeader header;
  std::vector<TrialRecord> records;
  /// Bytes up to the end of the last complete line.
  std::uintmax_t valid_bytes = 0;
  /// A trailing line without its newline was found and ignored.
  bool dropped_partial_line = false;
};

/// Reads a journal, dropping an unterminated final line. Throws IoError or
/// ParseError (also for a file without a complete header).
Journal read_journal(const std::filesystem::path& path);

/// Append-only writer; every line is flushed as it is written.
class JournalWriter {
 public:
  /// Starts a new journal, replacing any file at `path`. Throws IoError.
  static JournalWriter create(const std::filesystem::path& path, const JournalHeader& header);
  /// Continues an existing journal after cutting it back to `valid_bytes`.
  static JournalWriter resume(const std::filesystem::path& path, std::uintmax_t valid_bytes);

  void append(const TrialRecord& record);

 private:
  JournalWriter(std::filesystem::path path, std::ofstream out)
      : path_(std::move(path)), out_(std::move(out)) {}
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace subnet_hpo
