#include "betr/btree.hpp"

#include <set>

namespace betr {

std::string_view to_string(TickStatus s) {
  switch (s) {
    case TickStatus::Success: return "Success";
    case TickStatus::Failure: return "Failure";
    case TickStatus::Running: return "Running";
  }
  return "?";
}

BTNode BTNode::condition(std::string name, TagRole role) {
  if (role == TagRole::None || role == TagRole::Act)
    throw std::invalid_argument("condition role must be PostCnd, PreCnd or Cnstr");
  BTNode n;
  n.kind = NodeKind::Condition;
  n.role = role;
  n.behavior = parse_behavior(name);
  n.name = std::move(name);
  return n;
}

BTNode BTNode::action(std::string name) {
  BTNode n;
  n.kind = NodeKind::Action;
  n.role = TagRole::Act;
  n.behavior = parse_behavior(name);
  n.name = std::move(name);
  return n;
}

BTNode BTNode::control(NodeKind kind, std::vector<BTNode> children) {
  if (kind == NodeKind::Condition || kind == NodeKind::Action)
    throw std::invalid_argument("control node kind expected");
  if (children.empty()) throw std::invalid_argument("control node needs at least one child");
  BTNode n;
  n.kind = kind;
  n.children = std::move(children);
  return n;
}

namespace {

struct Tag {
  std::string_view name;
  bool closing = false;
  std::size_t offset = 0;
};

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  BTNode parse() {
    auto root = parse_node();
    if (pos_ != text_.size()) throw MalformedExpression("trailing input after root node", pos_);
    return root;
  }

 private:
  Tag read_tag() {
    if (pos_ >= text_.size()) throw MalformedExpression("unexpected end of expression", pos_);
    if (text_[pos_] != '[') throw MalformedExpression("expected a tag", pos_);
    const auto close = text_.find(']', pos_);
    if (close == std::string_view::npos) throw MalformedExpression("unterminated tag", pos_);
    Tag t;
    t.offset = pos_;
    t.name = text_.substr(pos_ + 1, close - pos_ - 1);
    if (!t.name.empty() && t.name.front() == '/') {
      t.closing = true;
      t.name.remove_prefix(1);
    }
    pos_ = close + 1;
    return t;
  }

  bool at_closing_tag() const { return pos_ + 1 < text_.size() && text_[pos_] == '[' && text_[pos_ + 1] == '/'; }

  void expect_close(std::string_view name) {
    const auto t = read_tag();
    if (!t.closing || t.name != name)
      throw MalformedExpression("expected [/" + std::string(name) + "] but found [" +
                                    (t.closing ? "/" : "") + std::string(t.name) + "]",
                                t.offset);
  }

  BTNode parse_node() {
    const auto open = read_tag();
    if (open.closing) throw MalformedExpression("unexpected [/" + std::string(open.name) + "]", open.offset);

    static const std::pair<std::string_view, TagRole> kLeafTags[] = {
        {"PostCnd", TagRole::PostCnd}, {"PreCnd", TagRole::PreCnd}, {"Cnstr", TagRole::Cnstr}, {"Act", TagRole::Act}};
    for (const auto& [tag, role] : kLeafTags) {
      if (open.name != tag) continue;
      const auto end = text_.find('[', pos_);
      const auto name = text_.substr(pos_, (end == std::string_view::npos ? text_.size() : end) - pos_);
      if (name.empty()) throw MalformedExpression("empty leaf name", pos_);
      pos_ += name.size();
      expect_close(tag);
      return role == TagRole::Act ? BTNode::action(std::string(name)) : BTNode::condition(std::string(name), role);
    }

    BTNode node;
    if (open.name == "Selector") {
      node.kind = NodeKind::Selector;
    } else if (open.name == "Sequence") {
      node.kind = NodeKind::Sequence;
    } else if (open.name == "Parallel") {
      node.kind = NodeKind::Parallel;
    } else if (open.name == "ParallelAll") {
      node.kind = NodeKind::Parallel;
      node.policy = ParallelPolicy::SuccessOnAll;
    } else {
      throw MalformedExpression("unknown tag [" + std::string(open.name) + "]", open.offset);
    }
    while (!at_closing_tag()) {
      if (pos_ >= text_.size()) throw MalformedExpression("missing [/" + std::string(open.name) + "]", pos_);
      node.children.push_back(parse_node());
    }
    if (node.children.empty()) throw MalformedExpression("control node without children", open.offset);
    expect_close(open.name);
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string_view tag_of(const BTNode& n) {
  switch (n.kind) {
    case NodeKind::Selector: return "Selector";
    case NodeKind::Sequence: return "Sequence";
    case NodeKind::Parallel: return n.policy == ParallelPolicy::SuccessOnAll ? "ParallelAll" : "Parallel";
    case NodeKind::Action: return "Act";
    case NodeKind::Condition:
      switch (n.role) {
        case TagRole::PostCnd: return "PostCnd";
        case TagRole::Cnstr: return "Cnstr";
        default: return "PreCnd";
      }
  }
  return "?";
}

void serialize_into(const BTNode& n, std::string& out) {
  const auto tag = tag_of(n);
  out += '[';
  out += tag;
  out += ']';
  if (n.is_leaf()) {
    out += n.name;
  } else {
    for (const auto& c : n.children) serialize_into(c, out);
  }
  out += "[/";
  out += tag;
  out += ']';
}

bool is_condition_branch(const BTNode& n) {
  if (n.kind == NodeKind::Condition) return true;
  if (n.kind != NodeKind::Sequence) return false;
  for (const auto& c : n.children)
    if (c.kind != NodeKind::Condition) return false;
  return true;
}

void collect_names(const BTNode& n, std::set<std::string_view>& out) {
  if (n.is_leaf()) {
    if (!n.is_dummy() && n.name != "DummyNode") out.insert(n.name);
    return;
  }
  for (const auto& c : n.children) collect_names(c, out);
}

void pretty_into(const BTNode& n, int indent, std::string& out) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out += tag_of(n);
  if (n.is_leaf()) {
    out += ' ';
    out += n.name;
  } else if (is_ppa(n)) {
    out += "  <PPA>";
  }
  out += '\n';
  for (const auto& c : n.children) pretty_into(c, indent + 1, out);
}

}  // namespace

BTNode build_tree(std::string_view expr) { return ExprParser(expr).parse(); }

std::string serialize(const BTNode& node) {
  std::string out;
  serialize_into(node, out);
  return out;
}

BTNode make_ppa(const std::vector<std::string>& postconditions, const std::vector<std::string>& preconditions,
                const std::vector<std::string>& constraints, const std::string& action) {
  if (action.empty()) throw std::invalid_argument("PPA needs an action");
  BTNode post;
  if (postconditions.empty()) {
    post = BTNode::condition("DummyNode", TagRole::PostCnd);
  } else if (postconditions.size() == 1) {
    post = BTNode::condition(postconditions.front(), TagRole::PostCnd);
  } else {
    std::vector<BTNode> conj;
    for (const auto& p : postconditions) conj.push_back(BTNode::condition(p, TagRole::PostCnd));
    post = BTNode::control(NodeKind::Sequence, std::move(conj));
  }
  std::vector<BTNode> body;
  for (const auto& p : preconditions) body.push_back(BTNode::condition(p, TagRole::PreCnd));
  for (const auto& c : constraints) body.push_back(BTNode::condition(c, TagRole::Cnstr));
  body.push_back(BTNode::action(action));
  return BTNode::control(NodeKind::Selector, {std::move(post), BTNode::control(NodeKind::Sequence, std::move(body))});
}

bool is_ppa(const BTNode& n) {
  if (n.kind != NodeKind::Selector || n.children.size() != 2) return false;
  const auto& left = n.children[0];
  const auto& right = n.children[1];
  if (!(is_condition_branch(left) || is_ppa(left))) return false;
  return right.kind == NodeKind::Sequence && !right.children.empty() &&
         right.children.back().kind == NodeKind::Action;
}

std::size_t count_ppa_subtrees(const BTNode& root) {
  std::size_t n = is_ppa(root) ? 1 : 0;
  for (const auto& c : root.children) n += count_ppa_subtrees(c);
  return n;
}

std::size_t unique_behavior_nodes(const BTNode& root) {
  std::set<std::string_view> names;
  collect_names(root, names);
  return names.size();
}

BTNode blend_agents(std::vector<BTNode> trees, Rng& rng) {
  if (trees.empty()) throw std::invalid_argument("blend_agents needs at least one tree");
  rng.shuffle(trees.begin(), trees.end());
  auto root = BTNode::control(NodeKind::Parallel, std::move(trees));
  root.policy = ParallelPolicy::SuccessOnOne;
  return root;
}

std::size_t tree_size(const BTNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += tree_size(c);
  return n;
}

std::string pretty_print(const BTNode& root) {
  std::string out;
  pretty_into(root, 0, out);
  return out;
}

}  // namespace betr
