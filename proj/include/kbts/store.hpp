#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "kbts/decision_tree.hpp"
#include "kbts/rule_model.hpp"

namespace kbts {

/// Immutable view of one rule-base version together with its compiled tree
/// (null when the rule-base is empty).
struct Snapshot {
  std::shared_ptr<const RuleBase> rules;
  std::shared_ptr<const DecisionTree> tree;
};

/// File-backed rule-base with single-writer / multi-reader access. Writers are
/// serialized; each write is persisted atomically before the new version
/// becomes visible, so readers only ever see complete versions.
class RuleStore {
 public:
  /// Loads path. When the file is absent and seed_if_missing is set, the seed
  /// corpus is written to path first. Throws IoError / ParseError.
  static std::unique_ptr<RuleStore> open(const std::filesystem::path& path,
                                         bool seed_if_missing);

  RuleStore(std::filesystem::path path, RuleBase initial);

  Snapshot snapshot() const;
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Runs edit on a private copy under the writer lock. If the version
  /// changed, the copy is saved and published. Exceptions from edit or save
  /// leave the store unchanged.
  void mutate(const std::function<void(RuleBase&)>& edit);

  /// Import: replaces the rules with incoming's. Identical content is a no-op;
  /// otherwise the version becomes max(incoming, current + 1) and the id
  /// high-water mark never decreases. Returns the published rule-base.
  std::shared_ptr<const RuleBase> replace(const RuleBase& incoming);

 private:
  void publish(RuleBase next);

  std::filesystem::path path_;
  std::mutex writer_;
  mutable std::shared_mutex snapshot_mu_;
  Snapshot current_;
};

/// Merge rule used by RuleStore::replace, exposed for the CLI import path.
RuleBase imported(const RuleBase& current, const RuleBase& incoming);

/// Live questionnaire sessions with idle expiry. Each session is serialized
/// on its own mutex; the registry lock is only held for lookup.
class SessionRegistry {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionRegistry(std::chrono::seconds idle_timeout) : idle_(idle_timeout) {}

  /// Returns the new session's id and first question.
  std::pair<std::string, Question> create(std::shared_ptr<const DecisionTree> tree);

  /// Runs fn on the session under its lock. Returns false if the id is
  /// unknown or expired.
  bool with_session(const std::string& id, const std::function<void(Session&)>& fn);

  /// Drops sessions idle for longer than the timeout. Returns how many.
  std::size_t purge(Clock::time_point now = Clock::now());
  std::size_t size() const;

 private:
  struct Entry {
    std::mutex mu;
    Session session;
    Clock::time_point last_used;
    explicit Entry(Session s) : session(std::move(s)), last_used(Clock::now()) {}
  };

  std::chrono::seconds idle_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace kbts
