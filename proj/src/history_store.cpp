#include "crosstune/history_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>

#include <unistd.h>

#include "crosstune/json_codec.hpp"

namespace crosstune {

std::string history_line(const StateRecord& record) { return to_json(record).dump(); }

std::vector<StateRecord> replay_history(const std::vector<std::string>& lines) {
  std::map<std::int64_t, StateRecord> by_step;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      StateRecord r = state_record_from_json(parse_json(lines[i]));
      by_step.insert_or_assign(r.step_index, std::move(r));
    } catch (const ValidationError& e) {
      if (i + 1 == lines.size()) break;
      throw ValidationError("history line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  std::vector<StateRecord> out;
  out.reserve(by_step.size());
  for (auto& [step, record] : by_step) out.push_back(std::move(record));
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

JsonlHistoryStore::JsonlHistoryStore(std::filesystem::path path) : path_(std::move(path)) {}

void JsonlHistoryStore::append(const StateRecord& record) {
  if (!out_) {
    if (path_.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path_.parent_path(), ec);
    }
    out_.reset(std::fopen(path_.c_str(), "a"));
    if (!out_) {
      throw PersistenceError("cannot open history '" + path_.string() +
                             "': " + std::strerror(errno));
    }
  }
  const std::string line = history_line(record) + '\n';
  if (std::fwrite(line.data(), 1, line.size(), out_.get()) != line.size() ||
      std::fflush(out_.get()) != 0 || ::fsync(::fileno(out_.get())) != 0) {
    throw PersistenceError("cannot write history '" + path_.string() +
                           "': " + std::strerror(errno));
  }
}

std::vector<StateRecord> JsonlHistoryStore::load() { return replay_history(read_lines(path_)); }

void MemoryHistoryStore::append(const StateRecord& record) {
  if (fail_next_) {
    fail_next_ = false;
    throw PersistenceError("injected history write failure");
  }
  lines_.push_back(history_line(record));
}

std::vector<StateRecord> MemoryHistoryStore::load() { return replay_history(lines_); }

}  // namespace crosstune
