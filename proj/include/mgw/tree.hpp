#pragma once

// Finite marked ordered rooted trees in Neveu's word formalism.
//
// A tree is stored as an array of (out-degree, mark) records in lexicographic
// (preorder / depth-first) order; a node's word is materialized only on
// demand.  All operations treat trees as immutable values.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgw {

// A word u = u_1 u_2 ... u_n of positive integers; the empty word is the
// root.  |u| is the depth, |u|_inf = max(|u|, u_1, ..., u_n) the norm.
using Word = std::vector<int>;

int word_depth(const Word& u);
int word_norm(const Word& u);
bool word_less(const Word& a, const Word& b);  // lexicographic order
std::string word_to_string(const Word& u);     // "1.3.2"; root -> "e"
Word word_from_string(const std::string& s);

struct TreeNode {
    std::int32_t degree = 0;  // out-degree k_u
    std::uint8_t mark = 0;    // eta_u in {0,1}

    bool operator==(const TreeNode&) const = default;
};

class MarkedTree {
  public:
    // Default: the single unmarked root.
    MarkedTree() : nodes_{TreeNode{}} { index(); }

    // From a preorder (degree, mark) sequence; throws std::invalid_argument
    // if the sequence does not describe exactly one finite tree.
    explicit MarkedTree(std::vector<TreeNode> nodes);

    static MarkedTree single(bool mark = false);

    std::size_t size() const { return nodes_.size(); }
    int degree(std::size_t i) const { return nodes_[i].degree; }
    bool mark(std::size_t i) const { return nodes_[i].mark != 0; }
    const TreeNode& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    // One past the last index of the subtree rooted at i.
    std::size_t subtree_end(std::size_t i) const { return end_[i]; }
    int depth(std::size_t i) const { return depth_[i]; }

    // Indices of the children of node i, in order.
    std::vector<std::size_t> children(std::size_t i) const;

    // Word <-> preorder index.  index_of returns nullopt if u is not a node.
    std::optional<std::size_t> index_of(const Word& u) const;
    Word word_of(std::size_t i) const;

    std::size_t mark_count() const;  // M(t*)
    int height() const;              // H(t)  = max |u|
    int norm() const;                // H_inf = max |u|_inf

    bool operator==(const MarkedTree&) const;

  private:
    void index();  // builds end_ and depth_, validates shape

    std::vector<TreeNode> nodes_;     // preorder
    std::vector<std::size_t> end_;    // subtree extents
    std::vector<std::int32_t> depth_;
};

// ---------------------------------------------------------------------------
// Restrictions r_h (height window) and r_{h,inf} (norm window).

struct Window {
    enum class Kind { Height, Norm };
    Kind kind = Kind::Height;
    int h = 0;

    static Window height(int h) { return {Kind::Height, h}; }
    static Window norm(int h) { return {Kind::Norm, h}; }
};

struct RestrictedTree {
    MarkedTree tree;                       // the window content itself
    Window window;
    std::vector<std::uint8_t> truncated;   // per node: degree was cut

    bool is_truncated(std::size_t i) const { return truncated[i] != 0; }
};

// r_h*(t*) or r_{h,inf}*(t*); marks at depth h are forced to 0.
RestrictedTree restrict(const MarkedTree& t, Window w);

// ---------------------------------------------------------------------------
// Grafting and subtree extraction.

// t (*)_x s: the children of s's root are appended after the existing
// children of x; the mark of x stays t's mark (the root mark of s is
// forgotten); all other marks of s are kept.
MarkedTree graft(const MarkedTree& t, const Word& x, const MarkedTree& s);

// S^x(t*): t* with all strict descendants of x removed and mark(x) := 0.
// By convention subtree_below(t, root) is the single unmarked root.
MarkedTree subtree_below(const MarkedTree& t, const Word& x);

// F_x(t*) = (S_{x1}(t*), ..., S_{x k_x}(t*)), marks inherited.
std::vector<MarkedTree> forest_above(const MarkedTree& t, const Word& x);

// Membership in the graft sets T(t*,x) and T_+(t*,x,k).
bool in_graft_set(const MarkedTree& s, const MarkedTree& t, const Word& x);
bool in_graft_set_plus(const MarkedTree& s, const MarkedTree& t, const Word& x,
                       int k);

// ---------------------------------------------------------------------------
// Mark decomposition: the forest F_q(t) indexed by the marked nodes and the
// skeleton S~^q_0(t*) (the subtree with no marked strict descendants of the
// root; {root} alone when the root is marked).

struct MarkDecomposition {
    std::vector<MarkedTree> forest;  // one tree per element of C~_0
    MarkedTree skeleton;
};

MarkDecomposition mark_decomposition(const MarkedTree& t);

// ---------------------------------------------------------------------------
// Serialization.  Canonical text form: (k,m)[child...], e.g.
// "(2,1)[(0,0)[](0,1)[]]".  JSON: {"degree":k,"mark":0|1,"children":[...]}.

std::string to_text(const MarkedTree& t);
MarkedTree tree_from_text(const std::string& s);

std::string to_json(const MarkedTree& t);
std::string to_json(const RestrictedTree& t);  // adds "truncated" flags
MarkedTree tree_from_json(const std::string& s);

}  // namespace mgw
