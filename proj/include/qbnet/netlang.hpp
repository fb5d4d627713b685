// netlang.hpp
// Text formats: the line-oriented net description language, matrix /
// measurement / ensemble input files, and the JSON result documents the
// command-line tool emits. Parse errors carry a 1-based line and column
// pointing inside the offending token. '#' starts a comment; blank lines
// are ignored; CRLF and LF inputs parse identically.
//
// Net grammar:
//   net <name>
//   node <label> [components <k>] states <s>... [parents <p>...]
//        [grounded <s> | marginalizer <i>]
//   amp <node> <child> | <parent-states>... = <re> <im>
//
// Floats are written with 17 significant digits, so serialize/parse
// round-trips preserve amplitudes bit for bit.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbnet/channels.hpp"
#include "qbnet/core.hpp"
#include "qbnet/net.hpp"
#include "qbnet/state.hpp"

namespace qbnet {

struct SourceSpan {
  std::size_t line = 0;    // 1-based
  std::size_t column = 0;  // 1-based byte offset
};

struct ParseError : Error {
  SourceSpan span;
  ParseError(ErrorKind k, SourceSpan s, const std::string& msg)
      : Error(k, "line " + std::to_string(s.line) + ", column " + std::to_string(s.column) +
                     ": " + msg),
        span(s) {}
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

struct Token {
  std::string text;
  SourceSpan span;
};

struct TokenLine {
  std::vector<Token> tokens;
  std::size_t line_no = 0;
};

inline std::vector<TokenLine> tokenize(std::string_view text) {
  std::vector<TokenLine> out;
  std::size_t line_no = 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);

    TokenLine tl;
    tl.line_no = line_no;
    std::size_t c = 0;
    while (c < line.size()) {
      if (line[c] == ' ' || line[c] == '\t') {
        ++c;
        continue;
      }
      const std::size_t start = c;
      while (c < line.size() && line[c] != ' ' && line[c] != '\t') ++c;
      tl.tokens.push_back({std::string(line.substr(start, c - start)), {line_no, start + 1}});
    }
    if (!tl.tokens.empty()) out.push_back(std::move(tl));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
    ++line_no;
  }
  return out;
}

inline SourceSpan after(const Token& t) { return {t.span.line, t.span.column + t.text.size()}; }

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
  return true;
}

// State labels are identifiers or unsigned integers.
inline bool is_plain_state(std::string_view s) {
  if (is_identifier(s)) return true;
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  return true;
}

inline bool parse_double_token(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

inline bool parse_size_token(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

// "(a,b,c)" -> {"a","b","c"}; every part must be a plain state label.
inline bool split_tuple(const std::string& s, std::vector<std::string>& parts) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return false;
  parts.clear();
  std::string cur;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  parts.push_back(cur);
  for (const auto& p : parts)
    if (!is_plain_state(p)) return false;
  return true;
}

// "id=count" for register declarations in matrix / measurement / ensemble
// headers.
inline Register parse_register_decl(const Token& t) {
  const std::size_t eq = t.text.find('=');
  if (eq == std::string::npos)
    throw ParseError(ErrorKind::SyntaxError, t.span, "expected '<register>=<size>'");
  const std::string id = t.text.substr(0, eq);
  std::size_t n = 0;
  if (!is_identifier(id) || !parse_size_token(t.text.substr(eq + 1), n) || n == 0)
    throw ParseError(ErrorKind::SyntaxError, t.span, "expected '<register>=<size>'");
  return Register{id, make_range_space(n)};
}

// "re,im" matrix entry.
inline Cx parse_entry_token(const Token& t) {
  const std::size_t comma = t.text.find(',');
  double re = 0.0, im = 0.0;
  if (comma == std::string::npos || !parse_double_token(t.text.substr(0, comma), re) ||
      !parse_double_token(t.text.substr(comma + 1), im))
    throw ParseError(ErrorKind::SyntaxError, t.span, "expected an entry of the form 're,im'");
  if (!std::isfinite(re) || !std::isfinite(im))
    throw ParseError(ErrorKind::SyntaxError, t.span, "entries must be finite");
  return Cx{re, im};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Net language

inline QBNet parse_net(std::string_view text) {
  using detail::Token;
  const auto lines = detail::tokenize(text);
  if (lines.empty())
    throw ParseError(ErrorKind::SyntaxError, {1, 1}, "empty input; expected 'net <name>'");

  QBNet net;
  {
    const auto& l = lines[0];
    if (l.tokens[0].text != "net")
      throw ParseError(ErrorKind::SyntaxError, l.tokens[0].span, "expected 'net <name>'");
    if (l.tokens.size() < 2 || !detail::is_identifier(l.tokens[1].text))
      throw ParseError(ErrorKind::SyntaxError,
                       l.tokens.size() < 2 ? detail::after(l.tokens[0]) : l.tokens[1].span,
                       "expected a net name identifier");
    if (l.tokens.size() > 2)
      throw ParseError(ErrorKind::SyntaxError, l.tokens[2].span, "unexpected token after net name");
    net.name = l.tokens[1].text;
  }

  std::map<std::string, std::size_t> node_index;
  std::map<std::string, std::set<std::pair<std::size_t, std::size_t>>> amps_seen;

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& l = lines[li];
    std::size_t t = 0;
    auto have = [&]() { return t < l.tokens.size(); };
    auto need = [&](const char* what) -> const Token& {
      if (!have())
        throw ParseError(ErrorKind::SyntaxError, detail::after(l.tokens.back()),
                         std::string("expected ") + what);
      return l.tokens[t];
    };
    const Token& head = l.tokens[t++];

    if (head.text == "node") {
      const Token& label_tok = need("a node label");
      if (!detail::is_identifier(label_tok.text))
        throw ParseError(ErrorKind::SyntaxError, label_tok.span, "node label must be an identifier");
      if (node_index.count(label_tok.text))
        throw ParseError(ErrorKind::DuplicateNode, label_tok.span,
                         "node '" + label_tok.text + "' is already declared");
      ++t;

      std::size_t component_count = 0;  // 0: atomic
      if (have() && l.tokens[t].text == "components") {
        ++t;
        const Token& k_tok = need("a component count");
        if (!detail::parse_size_token(k_tok.text, component_count) || component_count < 2)
          throw ParseError(ErrorKind::SyntaxError, k_tok.span,
                           "component count must be an integer of at least 2");
        ++t;
      }

      const Token& states_kw = need("'states'");
      if (states_kw.text != "states")
        throw ParseError(ErrorKind::SyntaxError, states_kw.span, "expected 'states'");
      ++t;

      std::vector<Token> state_toks;
      while (have() && l.tokens[t].text != "parents" && l.tokens[t].text != "grounded" &&
             l.tokens[t].text != "marginalizer")
        state_toks.push_back(l.tokens[t++]);
      if (state_toks.empty())
        throw ParseError(ErrorKind::SyntaxError,
                         have() ? l.tokens[t].span : detail::after(l.tokens.back()),
                         "expected at least one state label");

      StateSpace space;
      if (component_count == 0) {
        for (const auto& st : state_toks) {
          if (!detail::is_plain_state(st.text))
            throw ParseError(ErrorKind::SyntaxError, st.span,
                             "state label must be an identifier or integer");
          space.labels.push_back(st.text);
        }
      } else {
        // Tuples must enumerate the component product in row-major order
        // (leftmost slot slowest); the component label lists are inferred
        // from first appearance.
        std::vector<std::vector<std::string>> comps(component_count);
        for (const auto& st : state_toks) {
          std::vector<std::string> parts;
          if (!detail::split_tuple(st.text, parts) || parts.size() != component_count)
            throw ParseError(ErrorKind::SyntaxError, st.span,
                             "expected a tuple of " + std::to_string(component_count) +
                                 " state labels, like (a,b)");
          for (std::size_t c = 0; c < component_count; ++c) {
            bool known = false;
            for (const auto& existing : comps[c])
              if (existing == parts[c]) {
                known = true;
                break;
              }
            if (!known) comps[c].push_back(parts[c]);
          }
        }
        space = make_composite_space(comps);
        for (std::size_t i = 0; i < state_toks.size(); ++i) {
          if (i >= space.labels.size() || space.labels[i] != state_toks[i].text)
            throw ParseError(ErrorKind::SyntaxError, state_toks[i].span,
                             "states must enumerate the component product in row-major order");
        }
        if (space.labels.size() != state_toks.size())
          throw ParseError(ErrorKind::SyntaxError, detail::after(state_toks.back()),
                           "states list an incomplete component product");
      }
      {
        std::set<std::string> dedup;
        for (std::size_t i = 0; i < state_toks.size(); ++i)
          if (!dedup.insert(state_toks[i].text).second)
            throw ParseError(ErrorKind::SyntaxError, state_toks[i].span,
                             "state label repeated within the node");
      }

      std::vector<std::string> parents;
      std::vector<StateSpace> parent_spaces;
      if (have() && l.tokens[t].text == "parents") {
        ++t;
        while (have() && l.tokens[t].text != "grounded" && l.tokens[t].text != "marginalizer") {
          const Token& p = l.tokens[t++];
          auto it = node_index.find(p.text);
          if (it == node_index.end())
            throw ParseError(ErrorKind::UnknownParent, p.span,
                             "parent '" + p.text + "' is not declared");
          parents.push_back(p.text);
          parent_spaces.push_back(net.nodes[it->second].space());
        }
        if (parents.empty())
          throw ParseError(ErrorKind::SyntaxError,
                           have() ? l.tokens[t].span : detail::after(l.tokens.back()),
                           "expected at least one parent label");
      }

      NodeDecoration dec = NodeDecoration::plain();
      if (have() && l.tokens[t].text == "grounded") {
        ++t;
        const Token& g = need("a ground state label");
        if (!space.index_of(g.text))
          throw ParseError(ErrorKind::BadDecoration, g.span,
                           "ground state '" + g.text + "' is not among the node's states");
        dec = NodeDecoration::grounded(g.text);
        ++t;
      } else if (have() && l.tokens[t].text == "marginalizer") {
        ++t;
        const Token& m = need("a component index");
        std::size_t comp = 0;
        if (!detail::parse_size_token(m.text, comp))
          throw ParseError(ErrorKind::BadDecoration, m.span,
                           "marginalizer component must be a non-negative integer");
        dec = NodeDecoration::marginalizer(comp);
        ++t;
      }
      if (have())
        throw ParseError(ErrorKind::SyntaxError, l.tokens[t].span,
                         "unexpected token at end of node line");

      node_index[label_tok.text] = net.nodes.size();
      net.nodes.push_back(
          make_node(label_tok.text, std::move(space), std::move(parents), std::move(parent_spaces), dec));

    } else if (head.text == "amp") {
      const Token& node_tok = need("a node label");
      auto it = node_index.find(node_tok.text);
      if (it == node_index.end())
        throw ParseError(ErrorKind::UnknownParent, node_tok.span,
                         "amplitude names node '" + node_tok.text + "' before it is declared");
      Node& node = net.nodes[it->second];
      ++t;

      const Token& child_tok = need("a child state label");
      auto ci = node.space().index_of(child_tok.text);
      if (!ci)
        throw ParseError(ErrorKind::SyntaxError, child_tok.span,
                         "state '" + child_tok.text + "' is not among the node's states");
      ++t;

      const Token& bar = need("'|'");
      if (bar.text != "|")
        throw ParseError(ErrorKind::SyntaxError, bar.span, "expected '|'");
      ++t;

      std::vector<Token> parent_toks;
      while (have() && l.tokens[t].text != "=") parent_toks.push_back(l.tokens[t++]);
      const Token& eq = need("'='");
      ++t;
      if (parent_toks.size() != node.parents.size())
        throw ParseError(ErrorKind::SyntaxError, eq.span,
                         "expected " + std::to_string(node.parents.size()) +
                             " parent state(s), got " + std::to_string(parent_toks.size()));
      std::size_t pj = 0;
      for (std::size_t p = 0; p < parent_toks.size(); ++p) {
        auto pi = node.table.parent_spaces[p].index_of(parent_toks[p].text);
        if (!pi)
          throw ParseError(ErrorKind::SyntaxError, parent_toks[p].span,
                           "state '" + parent_toks[p].text + "' is not among parent '" +
                               node.parents[p] + "' states");
        pj = pj * node.table.parent_spaces[p].size() + *pi;
      }

      const Token& re_tok = need("a real part");
      ++t;
      const Token& im_tok = need("an imaginary part");
      ++t;
      if (have())
        throw ParseError(ErrorKind::SyntaxError, l.tokens[t].span,
                         "unexpected token after the amplitude");
      double re = 0.0, im = 0.0;
      if (!detail::parse_double_token(re_tok.text, re))
        throw ParseError(ErrorKind::SyntaxError, re_tok.span, "malformed real part");
      if (!detail::parse_double_token(im_tok.text, im))
        throw ParseError(ErrorKind::SyntaxError, im_tok.span, "malformed imaginary part");
      if (!std::isfinite(re) || !std::isfinite(im))
        throw ParseError(ErrorKind::SyntaxError, re_tok.span, "amplitudes must be finite");

      if (!amps_seen[node_tok.text].insert({*ci, pj}).second)
        throw ParseError(ErrorKind::DuplicateAmplitudeEntry, child_tok.span,
                         "amplitude for this child and parent tuple was already given");
      node.table.amp_at(*ci, pj) = Cx{re, im};

    } else {
      throw ParseError(ErrorKind::SyntaxError, head.span, "expected 'node' or 'amp'");
    }
  }
  return net;
}

// Declaration-order serialization; amplitude lines are sorted by (child
// index, parent tuple index) and entries that are exactly +0+0i are
// omitted. parse_net(serialize_net(net)) reproduces the net with bit-equal
// amplitudes.
inline std::string serialize_net(const QBNet& net) {
  std::string out = "net " + (net.name.empty() ? std::string("unnamed") : net.name) + "\n";
  for (const Node& n : net.nodes) {
    out += "node " + n.label;
    if (!n.space().components.empty())
      out += " components " + std::to_string(n.space().components.size());
    out += " states";
    for (const auto& s : n.space().labels) out += " " + s;
    if (!n.parents.empty()) {
      out += " parents";
      for (const auto& p : n.parents) out += " " + p;
    }
    switch (n.decoration.kind) {
      case DecorationKind::Plain: break;
      case DecorationKind::Grounded: out += " grounded " + n.decoration.ground_label; break;
      case DecorationKind::Marginalizer:
        out += " marginalizer " + std::to_string(n.decoration.component);
        break;
    }
    out += "\n";
  }
  for (const Node& n : net.nodes) {
    const std::size_t pd = n.table.parent_joint_dim();
    for (std::size_t c = 0; c < n.space().size(); ++c)
      for (std::size_t p = 0; p < pd; ++p) {
        const Cx v = n.table.amp_at(c, p);
        if (v.real() == 0.0 && v.imag() == 0.0 && !std::signbit(v.real()) &&
            !std::signbit(v.imag()))
          continue;
        out += "amp " + n.label + " " + n.space().labels[c] + " |";
        std::vector<std::string> tuple(n.parents.size());
        std::size_t rem = p;
        for (std::size_t i = n.parents.size(); i-- > 0;) {
          tuple[i] = n.table.parent_spaces[i].labels[rem % n.table.parent_spaces[i].size()];
          rem /= n.table.parent_spaces[i].size();
        }
        for (const auto& s : tuple) out += " " + s;
        out += " = " + format_double(v.real()) + " " + format_double(v.imag()) + "\n";
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix files

struct LabeledMatrix {
  std::string name;
  std::vector<Register> registers;
  Matrix m;
};

// Format:
//   matrix <name> registers <id>=<size> [<id>=<size> ...]
//   <row>...            one line per row, entries 're,im'
// The row count must equal the joint register dimension; every row must
// have the same number of entries.
inline LabeledMatrix parse_matrix_file(std::string_view text) {
  const auto lines = detail::tokenize(text);
  if (lines.empty())
    throw ParseError(ErrorKind::SyntaxError, {1, 1},
                     "empty input; expected 'matrix <name> registers ...'");
  const auto& h = lines[0];
  if (h.tokens[0].text != "matrix")
    throw ParseError(ErrorKind::SyntaxError, h.tokens[0].span, "expected 'matrix <name>'");
  if (h.tokens.size() < 2 || !detail::is_identifier(h.tokens[1].text))
    throw ParseError(ErrorKind::SyntaxError,
                     h.tokens.size() < 2 ? detail::after(h.tokens[0]) : h.tokens[1].span,
                     "expected a matrix name identifier");
  if (h.tokens.size() < 3 || h.tokens[2].text != "registers")
    throw ParseError(ErrorKind::SyntaxError,
                     h.tokens.size() < 3 ? detail::after(h.tokens[1]) : h.tokens[2].span,
                     "expected 'registers'");
  if (h.tokens.size() < 4)
    throw ParseError(ErrorKind::SyntaxError, detail::after(h.tokens[2]),
                     "expected at least one '<register>=<size>'");

  LabeledMatrix lm;
  lm.name = h.tokens[1].text;
  for (std::size_t t = 3; t < h.tokens.size(); ++t) {
    Register r = detail::parse_register_decl(h.tokens[t]);
    if (find_register(lm.registers, r.id))
      throw ParseError(ErrorKind::SyntaxError, h.tokens[t].span,
                       "register '" + r.id + "' declared twice");
    lm.registers.push_back(std::move(r));
  }

  const std::size_t rows = joint_dim(lm.registers);
  std::size_t cols = 0;
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& l = lines[li];
    if (row >= rows)
      throw ParseError(ErrorKind::ShapeMismatch, l.tokens[0].span,
                       "more rows than the declared registers allow (" + std::to_string(rows) +
                           ")");
    if (cols == 0) {
      cols = l.tokens.size();
      lm.m = Matrix(rows, cols);
    } else if (l.tokens.size() != cols) {
      throw ParseError(ErrorKind::ShapeMismatch, l.tokens[0].span,
                       "row has " + std::to_string(l.tokens.size()) + " entries, expected " +
                           std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) lm.m.at(row, c) = detail::parse_entry_token(l.tokens[c]);
    ++row;
  }
  if (row != rows)
    throw ParseError(ErrorKind::ShapeMismatch,
                     {lines.back().line_no + 1, 1},
                     "declared registers need " + std::to_string(rows) + " rows, found " +
                         std::to_string(row));
  return lm;
}

// ---------------------------------------------------------------------------
// Measurement files

struct NamedKraus {
  std::string name;
  KrausSet set;
};

// Format:
//   measurement <name> in <id>=<size> out <id>=<size>
//   kraus <outcome>
//   <n_out rows of n_in entries 're,im'>
//   ... further kraus blocks ...
inline NamedKraus parse_kraus_file(std::string_view text) {
  const auto lines = detail::tokenize(text);
  if (lines.empty())
    throw ParseError(ErrorKind::SyntaxError, {1, 1},
                     "empty input; expected 'measurement <name> in ... out ...'");
  const auto& h = lines[0];
  auto head_tok = [&](std::size_t i, const char* what) -> const detail::Token& {
    if (i >= h.tokens.size())
      throw ParseError(ErrorKind::SyntaxError, detail::after(h.tokens.back()),
                       std::string("expected ") + what);
    return h.tokens[i];
  };
  if (head_tok(0, "'measurement'").text != "measurement")
    throw ParseError(ErrorKind::SyntaxError, h.tokens[0].span, "expected 'measurement <name>'");
  if (!detail::is_identifier(head_tok(1, "a measurement name").text))
    throw ParseError(ErrorKind::SyntaxError, h.tokens[1].span,
                     "expected a measurement name identifier");
  if (head_tok(2, "'in'").text != "in")
    throw ParseError(ErrorKind::SyntaxError, h.tokens[2].span, "expected 'in'");
  const Register in_reg = detail::parse_register_decl(head_tok(3, "'<register>=<size>'"));
  if (head_tok(4, "'out'").text != "out")
    throw ParseError(ErrorKind::SyntaxError, h.tokens[4].span, "expected 'out'");
  const Register out_reg = detail::parse_register_decl(head_tok(5, "'<register>=<size>'"));
  if (h.tokens.size() > 6)
    throw ParseError(ErrorKind::SyntaxError, h.tokens[6].span,
                     "unexpected token after the measurement header");

  NamedKraus nk;
  nk.name = h.tokens[1].text;
  nk.set.in_register = in_reg;
  nk.set.out_register = out_reg;

  const std::size_t n_in = in_reg.space.size();
  const std::size_t n_out = out_reg.space.size();

  std::size_t li = 1;
  while (li < lines.size()) {
    const auto& bl = lines[li];
    if (bl.tokens[0].text != "kraus")
      throw ParseError(ErrorKind::SyntaxError, bl.tokens[0].span, "expected 'kraus <outcome>'");
    if (bl.tokens.size() != 2 || !detail::is_plain_state(bl.tokens[1].text))
      throw ParseError(ErrorKind::SyntaxError,
                       bl.tokens.size() < 2 ? detail::after(bl.tokens[0]) : bl.tokens[1].span,
                       "expected a single outcome label");
    if (nk.set.outcome_space.index_of(bl.tokens[1].text))
      throw ParseError(ErrorKind::SyntaxError, bl.tokens[1].span,
                       "outcome '" + bl.tokens[1].text + "' already has a block");
    nk.set.outcome_space.labels.push_back(bl.tokens[1].text);
    ++li;

    Matrix k(n_out, n_in);
    for (std::size_t r = 0; r < n_out; ++r, ++li) {
      if (li >= lines.size())
        throw ParseError(ErrorKind::ShapeMismatch, {lines.back().line_no + 1, 1},
                         "kraus block needs " + std::to_string(n_out) + " rows");
      const auto& rl = lines[li];
      if (rl.tokens[0].text == "kraus")
        throw ParseError(ErrorKind::ShapeMismatch, rl.tokens[0].span,
                         "kraus block needs " + std::to_string(n_out) + " rows");
      if (rl.tokens.size() != n_in)
        throw ParseError(ErrorKind::ShapeMismatch, rl.tokens[0].span,
                         "row has " + std::to_string(rl.tokens.size()) + " entries, expected " +
                             std::to_string(n_in));
      for (std::size_t c = 0; c < n_in; ++c) k.at(r, c) = detail::parse_entry_token(rl.tokens[c]);
    }
    nk.set.operators.push_back(std::move(k));
  }
  if (nk.set.operators.empty())
    throw ParseError(ErrorKind::SyntaxError, {h.tokens[0].span.line + 1, 1},
                     "expected at least one kraus block");
  return nk;
}

// ---------------------------------------------------------------------------
// Ensemble files

struct NamedEnsemble {
  std::string name;
  Ensemble ensemble;
};

// Format:
//   ensemble <name> register <id>=<size>
//   item <weight>
//   <one row of <size> entries 're,im'>
//   ... further items ...
inline NamedEnsemble parse_ensemble_file(std::string_view text) {
  const auto lines = detail::tokenize(text);
  if (lines.empty())
    throw ParseError(ErrorKind::SyntaxError, {1, 1},
                     "empty input; expected 'ensemble <name> register ...'");
  const auto& h = lines[0];
  if (h.tokens[0].text != "ensemble")
    throw ParseError(ErrorKind::SyntaxError, h.tokens[0].span, "expected 'ensemble <name>'");
  if (h.tokens.size() < 2 || !detail::is_identifier(h.tokens[1].text))
    throw ParseError(ErrorKind::SyntaxError,
                     h.tokens.size() < 2 ? detail::after(h.tokens[0]) : h.tokens[1].span,
                     "expected an ensemble name identifier");
  if (h.tokens.size() < 3 || h.tokens[2].text != "register")
    throw ParseError(ErrorKind::SyntaxError,
                     h.tokens.size() < 3 ? detail::after(h.tokens[1]) : h.tokens[2].span,
                     "expected 'register'");
  if (h.tokens.size() < 4)
    throw ParseError(ErrorKind::SyntaxError, detail::after(h.tokens[2]),
                     "expected '<register>=<size>'");
  const Register reg = detail::parse_register_decl(h.tokens[3]);
  if (h.tokens.size() > 4)
    throw ParseError(ErrorKind::SyntaxError, h.tokens[4].span,
                     "unexpected token after the ensemble header");

  NamedEnsemble ne;
  ne.name = h.tokens[1].text;
  const std::size_t n = reg.space.size();

  std::size_t li = 1;
  while (li < lines.size()) {
    const auto& il = lines[li];
    if (il.tokens[0].text != "item")
      throw ParseError(ErrorKind::SyntaxError, il.tokens[0].span, "expected 'item <weight>'");
    double w = 0.0;
    if (il.tokens.size() != 2 || !detail::parse_double_token(il.tokens[1].text, w) ||
        !std::isfinite(w))
      throw ParseError(ErrorKind::SyntaxError,
                       il.tokens.size() < 2 ? detail::after(il.tokens[0]) : il.tokens[1].span,
                       "expected a single finite weight");
    ++li;
    if (li >= lines.size())
      throw ParseError(ErrorKind::ShapeMismatch, {il.line_no + 1, 1},
                       "item needs a row of " + std::to_string(n) + " amplitudes");
    const auto& rl = lines[li];
    if (rl.tokens.size() != n)
      throw ParseError(ErrorKind::ShapeMismatch, rl.tokens[0].span,
                       "row has " + std::to_string(rl.tokens.size()) + " entries, expected " +
                           std::to_string(n));
    IndexedKet ket = IndexedKet::zero({reg});
    for (std::size_t c = 0; c < n; ++c) ket.amplitudes[c] = detail::parse_entry_token(rl.tokens[c]);
    ne.ensemble.items.push_back({w, std::move(ket)});
    ++li;
  }
  if (ne.ensemble.items.empty())
    throw ParseError(ErrorKind::SyntaxError, {h.tokens[0].span.line + 1, 1},
                     "expected at least one item");
  return ne;
}

// ---------------------------------------------------------------------------
// JSON result documents. Key order is alphabetical (the library sorts
// object keys), so rendered documents are byte-stable.

inline constexpr const char* index_ordering_note = "row-major; leftmost register varies slowest";

inline nlohmann::json complex_json(Cx v) { return nlohmann::json::array({v.real(), v.imag()}); }

inline nlohmann::json registers_json(const std::vector<Register>& regs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : regs) out.push_back({{"id", r.id}, {"states", r.space.labels}});
  return out;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(complex_json(m.at(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json ket_document(const IndexedKet& ket) {
  nlohmann::json amps = nlohmann::json::array();
  for (const Cx& a : ket.amplitudes) amps.push_back(complex_json(a));
  return {{"kind", "ket"},
          {"registers", registers_json(ket.registers)},
          {"ordering", index_ordering_note},
          {"dim", ket.dim()},
          {"amplitudes", std::move(amps)}};
}

inline nlohmann::json density_document(const DensityMatrix& rho) {
  const Cx tr = rho.dim() ? trace(rho.m) : Cx{0.0, 0.0};
  return {{"kind", "density"},
          {"registers", registers_json(rho.registers)},
          {"ordering", index_ordering_note},
          {"dim", rho.dim()},
          {"entries", matrix_json(rho.m)},
          {"trace", complex_json(tr)},
          {"unnormalized", rho.flagged_unnormalized}};
}

inline nlohmann::json probabilities_document(const std::vector<std::string>& outcomes,
                                             const std::vector<double>& values) {
  return {{"kind", "probabilities"}, {"outcomes", outcomes}, {"values", values}};
}

inline nlohmann::json unitary_document(const std::vector<Register>& regs, const Matrix& u) {
  return {{"kind", "unitary"},
          {"registers", registers_json(regs)},
          {"ordering", index_ordering_note},
          {"dim", u.rows},
          {"entries", matrix_json(u)}};
}

inline std::string render_document(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace qbnet
