#pragma once

// Append-only JSON Lines history. One StateRecord per line; a merged
// re-evaluation appends a superseding line for the same step_index, and
// loading keeps the last line per step_index.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "crosstune/domain.hpp"

namespace crosstune {

class HistoryStore {
 public:
  virtual ~HistoryStore() = default;

  // Durably appends one record. Throws PersistenceError on failure.
  virtual void append(const StateRecord& record) = 0;

  // Records ordered by step_index, superseded lines removed.
  virtual std::vector<StateRecord> load() = 0;
};

class JsonlHistoryStore final : public HistoryStore {
 public:
  explicit JsonlHistoryStore(std::filesystem::path path);

  void append(const StateRecord& record) override;
  std::vector<StateRecord> load() override;

  const std::filesystem::path& path() const { return path_; }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };

  std::filesystem::path path_;
  std::unique_ptr<std::FILE, FileCloser> out_;
};

// In-memory store for tests and benchmark trials.
class MemoryHistoryStore final : public HistoryStore {
 public:
  void append(const StateRecord& record) override;
  std::vector<StateRecord> load() override;

  const std::vector<std::string>& lines() const { return lines_; }
  // Makes the next append throw PersistenceError.
  void fail_next_append() { fail_next_ = true; }

 private:
  std::vector<std::string> lines_;
  bool fail_next_ = false;
};

std::string history_line(const StateRecord& record);

// Last-wins replay. A malformed final line (torn write) is skipped; a
// malformed line elsewhere throws ValidationError.
std::vector<StateRecord> replay_history(const std::vector<std::string>& lines);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace crosstune
