#include "kbts/decision_tree.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "kbts/error.hpp"
#include "kbts/text.hpp"

namespace kbts {

DecisionTree DecisionTree::build(const RuleBase& rb) {
  if (rb.empty()) throw Error(ErrorKind::EmptyRuleBase, "rule-base has no rules");

  struct Group {
    std::string label;
    std::map<std::string, const Rule*> symptoms;  // folded symptom -> rule
  };
  std::map<std::string, Group> categories;
  // rules() is in ascending id order, so the first spelling seen wins.
  for (const Rule& r : rb.rules()) {
    auto [it, inserted] = categories.try_emplace(fold_key(r.condition_a));
    if (inserted) it->second.label = r.condition_a;
    it->second.symptoms.emplace(fold_key(r.condition_b), &r);
  }

  DecisionTree tree;
  tree.version_ = rb.version();
  tree.nodes_.push_back(Node{std::string(kCategoryQuestion), {}, std::nullopt});
  for (const auto& [key, group] : categories) {
    const NodeIndex category = tree.nodes_.size();
    tree.nodes_[root()].edges.push_back(Edge{group.label, category});
    tree.nodes_.push_back(Node{std::string(kSymptomQuestion), {}, std::nullopt});
    for (const auto& [symptom_key, rule] : group.symptoms) {
      const NodeIndex leaf = tree.nodes_.size();
      tree.nodes_[category].edges.push_back(Edge{rule->condition_b, leaf});
      tree.nodes_.push_back(Node{{}, {}, diagnosis_of(*rule)});
    }
  }
  return tree;
}

Question DecisionTree::question_at(NodeIndex i) const {
  const Node& n = node(i);
  Question q{n.question, {}};
  q.options.reserve(n.edges.size());
  for (const Edge& e : n.edges) q.options.push_back(e.label);
  return q;
}

std::optional<DecisionTree::NodeIndex> DecisionTree::follow(
    NodeIndex from, std::string_view choice) const {
  const std::string key = fold_key(choice);
  for (const Edge& e : node(from).edges) {
    if (fold_key(e.label) == key) return e.child;
  }
  return std::nullopt;
}

std::vector<DecisionTree::NodeIndex> DecisionTree::leaves() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) out.push_back(i);
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<NodeIndex, std::size_t>> stack{{root(), 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    for (const Edge& e : nodes_[n].edges) stack.emplace_back(e.child, d + 1);
  }
  return deepest;
}

std::string new_session_token() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string token;
  token.reserve(32);
  for (int word = 0; word < 2; ++word) {
    std::uint64_t bits = rng();
    for (int i = 0; i < 16; ++i, bits >>= 4) token.push_back(kHex[bits & 0xf]);
  }
  return token;
}

Session::Session(std::shared_ptr<const DecisionTree> tree)
    : tree_(std::move(tree)), id_(new_session_token()) {}

Question Session::current_question() const {
  if (closed_) throw Error(ErrorKind::SessionClosed, "session " + id_ + " is closed");
  return tree_->question_at(cursor_);
}

AnswerResult Session::answer(std::string_view choice) {
  if (closed_) throw Error(ErrorKind::SessionClosed, "session " + id_ + " is closed");
  auto next = tree_->follow(cursor_, choice);
  if (!next) {
    throw InvalidChoiceError(normalize(choice), tree_->question_at(cursor_).options);
  }
  const DecisionTree::Node& from = tree_->node(cursor_);
  for (const DecisionTree::Edge& e : from.edges) {
    if (e.child == *next) transcript_.emplace_back(from.question, e.label);
  }
  cursor_ = *next;
  const DecisionTree::Node& to = tree_->node(cursor_);
  if (to.is_leaf()) {
    closed_ = true;
    return *to.diagnosis;
  }
  return tree_->question_at(cursor_);
}

std::pair<Session, Question> start_session(std::shared_ptr<const DecisionTree> tree) {
  Session s(std::move(tree));
  Question q = s.current_question();
  return {std::move(s), std::move(q)};
}

std::pair<Session, Question> start_session(const RuleBase& rb) {
  return start_session(std::make_shared<const DecisionTree>(DecisionTree::build(rb)));
}

}  // namespace kbts
