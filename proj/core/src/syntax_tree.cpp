#include "seqnlg/syntax_tree.hpp"

#include <cctype>
#include <functional>
#include <sstream>

#include "seqnlg/errors.hpp"

namespace seqnlg {

namespace {

bool is_bracket(const std::string& tok) { return tok == kOpenBracket || tok == kCloseBracket; }

bool valid_label(const std::string& s) {
  if (s.empty() || is_bracket(s)) return false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

void emit(const DeepSyntaxNode& node, TokenSequence& out) {
  out.emplace_back(kOpenBracket);
  out.push_back(node.lemma);
  out.push_back(node.formeme);
  for (const DeepSyntaxNode& child : node.children) emit(child, out);
  out.emplace_back(kCloseBracket);
}

void preorder(const std::vector<DeepSyntaxNode>& nodes,
              const std::function<void(const DeepSyntaxNode&)>& visit) {
  for (const DeepSyntaxNode& n : nodes) {
    visit(n);
    preorder(n.children, visit);
  }
}

class BracketParser {
 public:
  explicit BracketParser(const TokenSequence& tokens) : tokens_(tokens) {}

  TreeParse parse() {
    if (tokens_.empty()) throw ParseError("empty bracketed tree", 0);
    TreeParse result;
    parse_children(result.tree.children, 0);
    if (result.tree.empty()) {
      throw ParseError("no recoverable tree node in bracketed input", pos_);
    }
    result.recoveries = recoveries_;
    result.diagnostics = std::move(diagnostics_);
    return result;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }
  const std::string& peek() const { return tokens_[pos_]; }

  void repair(std::string what) {
    ++recoveries_;
    diagnostics_.push_back(std::move(what) + " at token " + std::to_string(pos_));
  }

  // Parses a node list; at depth > 0 stops before the closing bracket.
  void parse_children(std::vector<DeepSyntaxNode>& out, std::size_t depth) {
    while (!at_end()) {
      const std::string& tok = peek();
      if (tok == kOpenBracket) {
        parse_node(out, depth);
      } else if (tok == kCloseBracket) {
        if (depth > 0) return;
        repair("dropped stray ')'");
        ++pos_;
      } else {
        repair("dropped token '" + tok + "' outside a node");
        ++pos_;
      }
    }
  }

  void parse_node(std::vector<DeepSyntaxNode>& siblings, std::size_t depth) {
    ++pos_;  // "("
    if (at_end() || is_bracket(peek())) {
      // Node without a lemma: drop its bracket pair and keep any children.
      repair("dropped node without lemma");
      parse_children(siblings, depth + 1);
      close(depth);
      return;
    }
    DeepSyntaxNode node;
    node.lemma = peek();
    ++pos_;
    if (at_end() || is_bracket(peek())) {
      repair("assigned fallback formeme");
      node.formeme = std::string(kFallbackFormeme);
    } else {
      node.formeme = peek();
      ++pos_;
    }
    while (!at_end() && !is_bracket(peek())) {
      repair("dropped extra token '" + peek() + "' in node");
      ++pos_;
    }
    parse_children(node.children, depth + 1);
    close(depth);
    siblings.push_back(std::move(node));
  }

  void close(std::size_t) {
    if (at_end()) {
      repair("closed unterminated node");
      return;
    }
    ++pos_;  // ")"
  }

  const TokenSequence& tokens_;
  std::size_t pos_ = 0;
  std::size_t recoveries_ = 0;
  std::vector<std::string> diagnostics_;
};

}  // namespace

std::size_t DeepSyntaxNode::node_count() const {
  std::size_t n = 1;
  for (const DeepSyntaxNode& c : children) n += c.node_count();
  return n;
}

std::size_t DeepSyntaxTree::node_count() const {
  std::size_t n = 0;
  for (const DeepSyntaxNode& c : children) n += c.node_count();
  return n;
}

void DeepSyntaxTree::validate() const {
  preorder(children, [](const DeepSyntaxNode& n) {
    if (!valid_label(n.lemma) || !valid_label(n.formeme)) {
      throw DataError("invalid tree node '" + n.lemma + "/" + n.formeme + "'");
    }
  });
}

void DeepSyntaxTree::lowercase() {
  std::function<void(std::vector<DeepSyntaxNode>&)> walk = [&](std::vector<DeepSyntaxNode>& nodes) {
    for (DeepSyntaxNode& n : nodes) {
      for (char& c : n.lemma) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      for (char& c : n.formeme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      walk(n.children);
    }
  };
  walk(children);
}

TokenSequence tree_to_bracketed(const DeepSyntaxTree& tree) {
  TokenSequence out;
  for (const DeepSyntaxNode& n : tree.children) emit(n, out);
  return out;
}

TreeParse bracketed_to_tree(const TokenSequence& tokens) { return BracketParser(tokens).parse(); }

TreeParse parse_bracketed(std::string_view text) {
  TokenSequence tokens;
  std::istringstream in{std::string(text)};
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  return bracketed_to_tree(tokens);
}

std::string format_bracketed(const DeepSyntaxTree& tree) {
  std::string out;
  for (const std::string& tok : tree_to_bracketed(tree)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

TokenSequence tree_to_flat(const DeepSyntaxTree& tree) {
  TokenSequence out;
  preorder(tree.children, [&](const DeepSyntaxNode& n) {
    out.push_back(n.lemma);
    out.push_back(n.formeme);
  });
  return out;
}

TokenSequence tree_lemmas(const DeepSyntaxTree& tree) {
  TokenSequence out;
  preorder(tree.children, [&](const DeepSyntaxNode& n) { out.push_back(n.lemma); });
  return out;
}

}  // namespace seqnlg
