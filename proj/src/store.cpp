#include "kbts/store.hpp"

#include <algorithm>

#include "kbts/error.hpp"

namespace kbts {

namespace {

Snapshot make_snapshot(RuleBase rb) {
  auto rules = std::make_shared<const RuleBase>(std::move(rb));
  std::shared_ptr<const DecisionTree> tree;
  if (!rules->empty()) tree = std::make_shared<const DecisionTree>(DecisionTree::build(*rules));
  return Snapshot{std::move(rules), std::move(tree)};
}

}  // namespace

std::unique_ptr<RuleStore> RuleStore::open(const std::filesystem::path& path,
                                           bool seed_if_missing) {
  std::error_code ec;
  if (seed_if_missing && !std::filesystem::exists(path, ec)) {
    RuleBase seed = seed_corpus();
    save(seed, path);
    return std::make_unique<RuleStore>(path, std::move(seed));
  }
  return std::make_unique<RuleStore>(path, load(path));
}

RuleStore::RuleStore(std::filesystem::path path, RuleBase initial)
    : path_(std::move(path)), current_(make_snapshot(std::move(initial))) {}

Snapshot RuleStore::snapshot() const {
  std::shared_lock lock(snapshot_mu_);
  return current_;
}

void RuleStore::publish(RuleBase next) {
  save(next, path_);
  Snapshot snap = make_snapshot(std::move(next));
  std::unique_lock lock(snapshot_mu_);
  current_ = std::move(snap);
}

void RuleStore::mutate(const std::function<void(RuleBase&)>& edit) {
  std::lock_guard writer(writer_);
  RuleBase working = *snapshot().rules;
  const Version before = working.version();
  edit(working);
  if (working.version() != before) publish(std::move(working));
}

RuleBase imported(const RuleBase& current, const RuleBase& incoming) {
  if (current.rules() == incoming.rules() && current.last_id() >= incoming.last_id()) {
    return current;
  }
  std::vector<Rule> rules = incoming.rules();
  return RuleBase::from_records(std::move(rules),
                                std::max(incoming.version(), current.version() + 1),
                                std::max(current.last_id(), incoming.last_id()));
}

std::shared_ptr<const RuleBase> RuleStore::replace(const RuleBase& incoming) {
  std::lock_guard writer(writer_);
  std::shared_ptr<const RuleBase> current = snapshot().rules;
  RuleBase next = imported(*current, incoming);
  if (next == *current) return current;
  publish(std::move(next));
  return snapshot().rules;
}

std::pair<std::string, Question> SessionRegistry::create(
    std::shared_ptr<const DecisionTree> tree) {
  if (!tree) throw Error(ErrorKind::EmptyRuleBase, "rule-base has no rules");
  auto [session, question] = start_session(std::move(tree));
  std::string id = session.id();
  auto entry = std::make_shared<Entry>(std::move(session));
  purge();
  std::lock_guard lock(mu_);
  sessions_.emplace(id, std::move(entry));
  return {std::move(id), std::move(question)};
}

bool SessionRegistry::with_session(const std::string& id,
                                   const std::function<void(Session&)>& fn) {
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    entry = it->second;
  }
  std::lock_guard session_lock(entry->mu);
  if (Clock::now() - entry->last_used > idle_) {
    std::lock_guard lock(mu_);
    sessions_.erase(id);
    return false;
  }
  entry->last_used = Clock::now();
  fn(entry->session);
  return true;
}

std::size_t SessionRegistry::purge(Clock::time_point now) {
  std::lock_guard lock(mu_);
  return std::erase_if(sessions_, [&](const auto& kv) {
    std::unique_lock entry_lock(kv.second->mu, std::try_to_lock);
    // A session busy with a request is in use, not idle.
    return entry_lock.owns_lock() && now - kv.second->last_used > idle_;
  });
}

std::size_t SessionRegistry::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

}  // namespace kbts
