#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "kbts/rule_model.hpp"

namespace kbts {

inline constexpr std::string_view kCategoryQuestion =
    "What type of problem are you having?";
inline constexpr std::string_view kSymptomQuestion = "Which symptom do you observe?";

struct Question {
  std::string text;
  std::vector<std::string> options;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Two-level question graph compiled from a rule-base: the root asks for the
/// category (condition_a), each category node asks for the symptom
/// (condition_b), and each leaf holds exactly one rule's diagnosis. Edge
/// labels keep the spelling of the lowest-id rule that introduced them and are
/// ordered by their case-folded form.
class DecisionTree {
 public:
  using NodeIndex = std::size_t;

  struct Edge {
    std::string label;
    NodeIndex child = 0;
  };

  struct Node {
    std::string question;  // empty on leaves
    std::vector<Edge> edges;
    std::optional<Diagnosis> diagnosis;

    bool is_leaf() const noexcept { return diagnosis.has_value(); }
  };

  /// Throws EmptyRuleBase.
  static DecisionTree build(const RuleBase& rb);

  static constexpr NodeIndex root() noexcept { return 0; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  Version version() const noexcept { return version_; }

  /// Question at an internal node.
  Question question_at(NodeIndex i) const;

  /// Child reached by choice (normalized, case-insensitive), if any.
  std::optional<NodeIndex> follow(NodeIndex from, std::string_view choice) const;

  std::vector<NodeIndex> leaves() const;
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
  Version version_ = 0;
};

using AnswerResult = std::variant<Question, Diagnosis>;

/// One user's walk through a frozen tree. The tree snapshot is shared, so a
/// session keeps answering against the rule-base version it started on.
class Session {
 public:
  explicit Session(std::shared_ptr<const DecisionTree> tree);

  const std::string& id() const noexcept { return id_; }
  Version tree_version() const noexcept { return tree_->version(); }
  DecisionTree::NodeIndex cursor() const noexcept { return cursor_; }
  bool closed() const noexcept { return closed_; }
  const std::vector<std::pair<std::string, std::string>>& transcript() const noexcept {
    return transcript_;
  }

  /// Throws SessionClosed.
  Question current_question() const;

  /// Advances the cursor. Returns the next question, or the diagnosis when a
  /// leaf is reached; the session is closed afterwards. Throws
  /// InvalidChoiceError (state unchanged) or SessionClosed.
  AnswerResult answer(std::string_view choice);

 private:
  std::shared_ptr<const DecisionTree> tree_;
  std::string id_;
  DecisionTree::NodeIndex cursor_ = DecisionTree::root();
  bool closed_ = false;
  std::vector<std::pair<std::string, std::string>> transcript_;
};

/// Throws EmptyRuleBase.
std::pair<Session, Question> start_session(const RuleBase& rb);
std::pair<Session, Question> start_session(std::shared_ptr<const DecisionTree> tree);

/// 128-bit random hex token.
std::string new_session_token();

}  // namespace kbts
