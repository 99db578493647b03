#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kbts/error.hpp"
#include "kbts/rule_model.hpp"

namespace kbts {

namespace {

using ordered_json = nlohmann::ordered_json;

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

const ordered_json& require_key(const ordered_json& obj, const char* key,
                                std::size_t record) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("record " + std::to_string(record) + ": missing \"" + key + "\"",
                     0, {record});
  }
  return *it;
}

std::string require_string(const ordered_json& obj, const char* key,
                           std::size_t record) {
  const ordered_json& v = require_key(obj, key, record);
  if (!v.is_string()) {
    throw ParseError("record " + std::to_string(record) + ": \"" + key +
                         "\" must be a string",
                     0, {record});
  }
  return v.get<std::string>();
}

[[noreturn]] void io_failure(const std::string& what, const std::filesystem::path& path) {
  throw Error(ErrorKind::IoError, what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string to_json_text(const RuleBase& rb) {
  ordered_json doc;
  doc["version"] = rb.version();
  ordered_json rules = ordered_json::array();
  for (const Rule& r : rb.rules()) {
    ordered_json rec;
    rec["id"] = r.id;
    rec["if"] = r.condition_a;
    rec["and"] = r.condition_b;
    rec["then"] = r.conclusion;
    rec["solution"] = r.solution;
    rules.push_back(std::move(rec));
  }
  doc["rules"] = std::move(rules);
  // Only needed when the newest rule was deleted; otherwise implied by the
  // largest id on file.
  const RuleId max_id = rb.empty() ? 0 : rb.rules().back().id;
  if (rb.last_id() > max_id) doc["last_id"] = rb.last_id();
  return doc.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

RuleBase parse_rulebase(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const ordered_json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!doc.is_object()) throw ParseError("rule file must be a JSON object", 1);

  auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer()) {
    throw ParseError("\"version\" must be an integer", 0);
  }
  auto rules = doc.find("rules");
  if (rules == doc.end() || !rules->is_array()) {
    throw ParseError("\"rules\" must be an array", 0);
  }
  RuleId last_id = 0;
  if (auto it = doc.find("last_id"); it != doc.end()) {
    if (!it->is_number_integer()) throw ParseError("\"last_id\" must be an integer", 0);
    last_id = it->get<RuleId>();
  }

  std::vector<Rule> records;
  records.reserve(rules->size());
  for (std::size_t i = 0; i < rules->size(); ++i) {
    const ordered_json& rec = (*rules)[i];
    if (!rec.is_object()) {
      throw ParseError("record " + std::to_string(i) + " is not an object", 0, {i});
    }
    const ordered_json& id = require_key(rec, "id", i);
    if (!id.is_number_integer()) {
      throw ParseError("record " + std::to_string(i) + ": \"id\" must be an integer",
                       0, {i});
    }
    Rule r;
    r.id = id.get<RuleId>();
    r.condition_a = require_string(rec, "if", i);
    r.condition_b = require_string(rec, "and", i);
    r.conclusion = require_string(rec, "then", i);
    r.solution = require_string(rec, "solution", i);
    records.push_back(std::move(r));
  }
  return RuleBase::from_records(std::move(records), version->get<Version>(), last_id);
}

RuleBase load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure("cannot open", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) io_failure("cannot read", path);
  return parse_rulebase(buf.str());
}

void save(const RuleBase& rb, const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  const std::string text = to_json_text(rb);
  std::filesystem::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);

  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("cannot create", tmp);
  try {
    write_all(fd, text, tmp);
    if (::fsync(fd) != 0) io_failure("cannot sync", tmp);
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  if (::close(fd) != 0) {
    ::unlink(tmp.c_str());
    io_failure("cannot close", tmp);
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    io_failure("cannot rename onto", path);
  }
  int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace kbts
