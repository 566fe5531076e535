#include "mgw/tree.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace mgw {

int word_depth(const Word& u) { return static_cast<int>(u.size()); }

int word_norm(const Word& u) {
    int m = word_depth(u);
    for (int a : u) m = std::max(m, a);
    return m;
}

bool word_less(const Word& a, const Word& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::string word_to_string(const Word& u) {
    if (u.empty()) return "e";
    std::ostringstream os;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i) os << '.';
        os << u[i];
    }
    return os.str();
}

Word word_from_string(const std::string& s) {
    if (s.empty() || s == "e") return {};
    Word u;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find('.', pos);
        if (next == std::string::npos) next = s.size();
        const std::string part = s.substr(pos, next - pos);
        int letter = 0;
        try {
            letter = std::stoi(part);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad word component '" + part + "'");
        }
        if (letter < 1) throw std::invalid_argument("word letters must be >= 1");
        u.push_back(letter);
        pos = next + 1;
    }
    return u;
}

// ---------------------------------------------------------------------------

MarkedTree::MarkedTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("tree must have a root");
    index();
}

MarkedTree MarkedTree::single(bool mark) {
    MarkedTree t;
    t.nodes_[0].mark = mark ? 1 : 0;
    return t;
}

void MarkedTree::index() {
    const std::size_t n = nodes_.size();
    end_.assign(n, 0);
    depth_.assign(n, 0);
    // Preorder walk with an explicit stack of (node, children still pending).
    std::vector<std::pair<std::size_t, std::int64_t>> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].degree < 0)
            throw std::invalid_argument("negative degree");
        if (nodes_[i].mark > 1) throw std::invalid_argument("mark must be 0/1");
        if (i > 0) {
            if (stack.empty())
                throw std::invalid_argument("preorder sequence has trailing nodes");
            depth_[i] = depth_[stack.back().first] + 1;
        }
        stack.emplace_back(i, nodes_[i].degree);
        // Pop completed subtrees.
        while (!stack.empty() && stack.back().second == 0) {
            end_[stack.back().first] = i + 1;
            stack.pop_back();
            if (!stack.empty()) --stack.back().second;
        }
    }
    if (!stack.empty())
        throw std::invalid_argument("preorder sequence ends inside a subtree");
}

std::vector<std::size_t> MarkedTree::children(std::size_t i) const {
    std::vector<std::size_t> c;
    c.reserve(static_cast<std::size_t>(nodes_[i].degree));
    std::size_t j = i + 1;
    while (j < end_[i]) {
        c.push_back(j);
        j = end_[j];
    }
    return c;
}

std::optional<std::size_t> MarkedTree::index_of(const Word& u) const {
    std::size_t i = 0;
    for (int letter : u) {
        if (letter < 1 || letter > nodes_[i].degree) return std::nullopt;
        std::size_t j = i + 1;
        for (int c = 1; c < letter; ++c) j = end_[j];
        i = j;
    }
    return i;
}

Word MarkedTree::word_of(std::size_t i) const {
    Word u(static_cast<std::size_t>(depth_[i]));
    // Walk upwards: find, for each ancestor level, which child block holds i.
    std::size_t at = 0;
    for (int d = 0; d < depth_[i]; ++d) {
        std::size_t j = at + 1;
        int letter = 1;
        while (end_[j] <= i) {
            j = end_[j];
            ++letter;
        }
        u[static_cast<std::size_t>(d)] = letter;
        at = j;
    }
    return u;
}

std::size_t MarkedTree::mark_count() const {
    std::size_t m = 0;
    for (const TreeNode& nd : nodes_) m += nd.mark;
    return m;
}

int MarkedTree::height() const {
    int h = 0;
    for (std::size_t i = 0; i < size(); ++i) h = std::max(h, depth(i));
    return h;
}

int MarkedTree::norm() const {
    int h = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        h = std::max(h, depth_[i]);
        // The norm also bounds every letter: letter of node j under parent p
        // is its 1-based child rank.
        std::size_t j = i + 1;
        int letter = 0;
        while (j < end_[i]) {
            ++letter;
            j = end_[j];
        }
        h = std::max(h, letter);  // max letter used below node i
    }
    return h;
}

bool MarkedTree::operator==(const MarkedTree& o) const {
    return nodes_ == o.nodes_;
}

// ---------------------------------------------------------------------------

RestrictedTree restrict(const MarkedTree& t, Window w) {
    if (w.h < 0) throw std::invalid_argument("window height must be >= 0");
    std::vector<TreeNode> out;
    std::vector<std::uint8_t> trunc;

    // Recursive copy; for norm windows a child with rank > h is cut.
    auto rec = [&](auto&& self, std::size_t i) -> void {
        const int d = t.depth(i);
        int keep;  // number of children kept
        if (d >= w.h) {
            keep = 0;
        } else if (w.kind == Window::Kind::Norm) {
            keep = std::min(t.degree(i), w.h);
        } else {
            keep = t.degree(i);
        }
        TreeNode nd;
        nd.degree = keep;
        nd.mark = (d >= w.h) ? 0 : t.node(i).mark;  // eta^h boundary rule
        out.push_back(nd);
        trunc.push_back(keep < t.degree(i) ? 1 : 0);
        std::size_t j = i + 1;
        for (int c = 0; c < keep; ++c) {
            self(self, j);
            j = t.subtree_end(j);
        }
    };
    rec(rec, 0);
    return RestrictedTree{MarkedTree(std::move(out)), w, std::move(trunc)};
}

static std::size_t require_index(const MarkedTree& t, const Word& x,
                                 const char* op) {
    auto i = t.index_of(x);
    if (!i)
        throw std::domain_error(std::string(op) + ": node " +
                                word_to_string(x) + " not in tree");
    return *i;
}

MarkedTree graft(const MarkedTree& t, const Word& x, const MarkedTree& s) {
    const std::size_t xi = require_index(t, x, "graft");
    const std::size_t xe = t.subtree_end(xi);
    std::vector<TreeNode> out;
    out.reserve(t.size() + s.size() - 1);
    out.insert(out.end(), t.nodes().begin(),
               t.nodes().begin() + static_cast<std::ptrdiff_t>(xe));
    out[xi].degree += s.degree(0);  // new children appended on the right
    out.insert(out.end(), s.nodes().begin() + 1, s.nodes().end());
    out.insert(out.end(), t.nodes().begin() + static_cast<std::ptrdiff_t>(xe),
               t.nodes().end());
    return MarkedTree(std::move(out));
}

MarkedTree subtree_below(const MarkedTree& t, const Word& x) {
    if (x.empty()) return MarkedTree::single(false);  // documented convention
    const std::size_t xi = require_index(t, x, "subtree_below");
    const std::size_t xe = t.subtree_end(xi);
    std::vector<TreeNode> out;
    out.reserve(t.size() - (xe - xi) + 1);
    out.insert(out.end(), t.nodes().begin(),
               t.nodes().begin() + static_cast<std::ptrdiff_t>(xi));
    out.push_back(TreeNode{0, 0});  // x becomes an unmarked leaf
    out.insert(out.end(), t.nodes().begin() + static_cast<std::ptrdiff_t>(xe),
               t.nodes().end());
    return MarkedTree(std::move(out));
}

std::vector<MarkedTree> forest_above(const MarkedTree& t, const Word& x) {
    const std::size_t xi = require_index(t, x, "forest_above");
    std::vector<MarkedTree> forest;  // empty when x is a leaf
    std::size_t j = xi + 1;
    while (j < t.subtree_end(xi)) {
        const std::size_t je = t.subtree_end(j);
        forest.emplace_back(std::vector<TreeNode>(
            t.nodes().begin() + static_cast<std::ptrdiff_t>(j),
            t.nodes().begin() + static_cast<std::ptrdiff_t>(je)));
        j = je;
    }
    return forest;
}

bool in_graft_set(const MarkedTree& s, const MarkedTree& t, const Word& x) {
    const std::size_t xt = require_index(t, x, "in_graft_set");
    auto xs = s.index_of(x);
    if (!xs) return false;
    // The mark of x is inherited from t* (the graft forgets the root mark of
    // the grafted tree).
    if (s.mark(*xs) != t.mark(xt)) return false;
    if (s.degree(*xs) < t.degree(xt)) return false;
    // Outside the strict descendants of x the trees must agree exactly.
    if (!(subtree_below(s, x) == subtree_below(t, x))) return false;
    // The first k_x(t) subtrees of x must reproduce F_x(t*).
    if (t.degree(xt) > 0) {
        auto fs = forest_above(s, x);
        auto ft = forest_above(t, x);
        for (std::size_t c = 0; c < ft.size(); ++c)
            if (!(fs[c] == ft[c])) return false;
    }
    return true;
}

bool in_graft_set_plus(const MarkedTree& s, const MarkedTree& t, const Word& x,
                       int k) {
    auto xs = s.index_of(x);
    if (!xs || s.degree(*xs) < k) return false;
    return in_graft_set(s, t, x);
}

// ---------------------------------------------------------------------------

MarkDecomposition mark_decomposition(const MarkedTree& t) {
    const std::size_t n = t.size();

    // Skeleton S~^q_0: if the root is marked it is {root}; otherwise the
    // subtree of nodes with no marked strict ancestor, marked nodes becoming
    // leaves.
    MarkedTree skeleton = MarkedTree::single(t.mark(0));
    if (!t.mark(0)) {
        std::vector<TreeNode> sk;
        auto rec = [&](auto&& self, std::size_t i) -> void {
            TreeNode nd = t.node(i);
            if (nd.mark) nd.degree = 0;  // marked nodes close the skeleton
            sk.push_back(nd);
            if (nd.degree > 0) {
                std::size_t j = i + 1;
                while (j < t.subtree_end(i)) {
                    self(self, j);
                    j = t.subtree_end(j);
                }
            }
        };
        rec(rec, 0);
        skeleton = MarkedTree(std::move(sk));
    }

    // Forest F_q(t): one node per marked node of t; the forest parent of a
    // marked node is its nearest marked strict ancestor.  Children keep the
    // lexicographic order, which is the preorder of t.
    std::vector<std::size_t> marked;  // preorder list of marked nodes
    std::vector<std::ptrdiff_t> parent(n, -1);  // index into `marked`
    std::vector<std::vector<std::size_t>> kids;  // forest children lists
    {
        // stack entry: (subtree end, index into `marked` of nearest marked
        // ancestor or -1).
        std::vector<std::pair<std::size_t, std::ptrdiff_t>> stack;
        for (std::size_t i = 0; i < n; ++i) {
            while (!stack.empty() && stack.back().first <= i) stack.pop_back();
            const std::ptrdiff_t up = stack.empty() ? -1 : stack.back().second;
            if (t.mark(i)) {
                marked.push_back(i);
                kids.emplace_back();
                const std::ptrdiff_t self_id =
                    static_cast<std::ptrdiff_t>(marked.size()) - 1;
                if (up >= 0) kids[static_cast<std::size_t>(up)].push_back(
                    static_cast<std::size_t>(self_id));
                parent[i] = up;
                stack.emplace_back(t.subtree_end(i), self_id);
            } else if (!stack.empty()) {
                stack.emplace_back(t.subtree_end(i), up);
            }
        }
    }

    MarkDecomposition out{{}, std::move(skeleton)};
    std::vector<TreeNode> buf;
    auto emit = [&](auto&& self, std::size_t id) -> void {
        buf.push_back(TreeNode{static_cast<std::int32_t>(kids[id].size()), 0});
        for (std::size_t c : kids[id]) self(self, c);
    };
    for (std::size_t id = 0; id < marked.size(); ++id) {
        if (parent[marked[id]] >= 0) continue;  // not a forest root
        buf.clear();
        emit(emit, id);
        out.forest.emplace_back(buf);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string to_text(const MarkedTree& t) {
    std::ostringstream os;
    auto rec = [&](auto&& self, std::size_t i) -> void {
        os << '(' << t.degree(i) << ',' << (t.mark(i) ? 1 : 0) << ")[";
        std::size_t j = i + 1;
        while (j < t.subtree_end(i)) {
            self(self, j);
            j = t.subtree_end(j);
        }
        os << ']';
    };
    rec(rec, 0);
    return os.str();
}

MarkedTree tree_from_text(const std::string& s) {
    std::size_t pos = 0;
    std::vector<TreeNode> nodes;
    auto expect = [&](char c) {
        if (pos >= s.size() || s[pos] != c)
            throw std::invalid_argument("tree text: expected '" +
                                        std::string(1, c) + "' at position " +
                                        std::to_string(pos));
        ++pos;
    };
    auto number = [&]() {
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos == start) throw std::invalid_argument("tree text: number expected");
        return std::stoi(s.substr(start, pos - start));
    };
    auto rec = [&](auto&& self) -> int {  // returns subtree size
        expect('(');
        const int k = number();
        expect(',');
        const int m = number();
        expect(')');
        if (m != 0 && m != 1) throw std::invalid_argument("mark must be 0/1");
        nodes.push_back(TreeNode{k, static_cast<std::uint8_t>(m)});
        expect('[');
        int sz = 1, kids = 0;
        while (pos < s.size() && s[pos] == '(') {
            sz += self(self);
            ++kids;
        }
        expect(']');
        if (kids != k)
            throw std::invalid_argument("tree text: degree/children mismatch");
        return sz;
    };
    rec(rec);
    if (pos != s.size())
        throw std::invalid_argument("tree text: trailing characters");
    return MarkedTree(std::move(nodes));
}

static nlohmann::json node_to_json(const MarkedTree& t, std::size_t i,
                                   const std::vector<std::uint8_t>* trunc) {
    nlohmann::json j;
    j["degree"] = t.degree(i);
    j["mark"] = t.mark(i) ? 1 : 0;
    if (trunc && (*trunc)[i]) j["truncated"] = true;
    auto& ch = j["children"] = nlohmann::json::array();
    std::size_t c = i + 1;
    while (c < t.subtree_end(i)) {
        ch.push_back(node_to_json(t, c, trunc));
        c = t.subtree_end(c);
    }
    return j;
}

std::string to_json(const MarkedTree& t) {
    return node_to_json(t, 0, nullptr).dump();
}

std::string to_json(const RestrictedTree& t) {
    return node_to_json(t.tree, 0, &t.truncated).dump();
}

static void node_from_json(const nlohmann::json& j,
                           std::vector<TreeNode>& nodes) {
    const int k = j.at("degree").get<int>();
    const int m = j.value("mark", 0);
    if (m != 0 && m != 1) throw std::invalid_argument("mark must be 0/1");
    const auto& ch = j.at("children");
    if (static_cast<int>(ch.size()) != k)
        throw std::invalid_argument("tree json: degree/children mismatch");
    nodes.push_back(TreeNode{k, static_cast<std::uint8_t>(m)});
    for (const auto& c : ch) node_from_json(c, nodes);
}

MarkedTree tree_from_json(const std::string& s) {
    nlohmann::json j = nlohmann::json::parse(s);
    std::vector<TreeNode> nodes;
    node_from_json(j, nodes);
    return MarkedTree(std::move(nodes));
}

}  // namespace mgw
