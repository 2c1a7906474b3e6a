#pragma once

// Text format for interaction schemes.
//
//   # onestep-model v1
//   name = fasttrack
//
//   [parameters]
//   lambda = 1
//   beta = 0.1
//   mu = 0.5
//
//   [species]
//   N
//   L
//
//   [aggregates]
//   total = N + 1*L          # weight*Species terms joined by '+'
//
//   [reactions]
//   arrival: 0 -> N @ lambda
//   download: N + L -> 2 L @ beta * N * L
//   departure: L -> 0 @ mu * L
//
// The first line is the version marker. Lines starting with '#' are comments
// and blank lines are ignored. Each section may appear once, in any order.
// Reaction sides are "0" or '+'-joined terms "[count] Species". The rate
// after '@' names a parameter followed by '*'-joined factors "Name[^k]", each
// a species or an aggregate. Unknown sections and keys are rejected.

#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "onestep/error.hpp"
#include "onestep/scheme.hpp"

namespace onestep {

inline constexpr std::string_view kModelFileHeader = "# onestep-model v1";

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

enum class Tok { ident, number, plus, minus, star, caret, arrow, colon, equals, at, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double value = 0.0;
  int column = 1;
};

class LineLexer {
 public:
  LineLexer(std::string_view line, int line_no, int column_offset)
      : line_(line), line_no_(line_no), offset_(column_offset) {
    lex();
  }

  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_ == tokens_.size() - 1 ? pos_ : pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  Token expect(Tok k, const char* what) {
    if (peek().kind != k) fail("expected " + std::string(what), peek());
    return next();
  }
  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw ParseError(msg, line_no_, at.column);
  }
  int line() const { return line_no_; }

 private:
  void lex() {
    std::size_t i = 0;
    while (i < line_.size()) {
      const char ch = line_[i];
      const int col = offset_ + static_cast<int>(i) + 1;
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        std::size_t j = i;
        while (j < line_.size() &&
               (std::isalnum(static_cast<unsigned char>(line_[j])) || line_[j] == '_'))
          ++j;
        tokens_.push_back({Tok::ident, std::string(line_.substr(i, j - i)), 0.0, col});
        i = j;
      } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(line_.data() + i, line_.data() + line_.size(), v);
        if (ec != std::errc()) throw ParseError("malformed number", line_no_, col);
        const std::size_t j = static_cast<std::size_t>(ptr - line_.data());
        tokens_.push_back({Tok::number, std::string(line_.substr(i, j - i)), v, col});
        i = j;
      } else if (ch == '-' && i + 1 < line_.size() && line_[i + 1] == '>') {
        tokens_.push_back({Tok::arrow, "->", 0.0, col});
        i += 2;
      } else {
        Tok k;
        switch (ch) {
          case '+': k = Tok::plus; break;
          case '-': k = Tok::minus; break;
          case '*': k = Tok::star; break;
          case '^': k = Tok::caret; break;
          case ':': k = Tok::colon; break;
          case '=': k = Tok::equals; break;
          case '@': k = Tok::at; break;
          default: throw ParseError(std::string("unexpected character '") + ch + "'", line_no_, col);
        }
        tokens_.push_back({k, std::string(1, ch), 0.0, col});
        ++i;
      }
    }
    tokens_.push_back({Tok::end, "", 0.0, offset_ + static_cast<int>(line_.size()) + 1});
  }

  std::string_view line_;
  int line_no_;
  int offset_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

struct SourceLine {
  std::string_view text;
  int line;
  int offset;  // columns trimmed from the left
};

inline double parse_signed_number(LineLexer& lx) {
  const bool negative = lx.accept(Tok::minus);
  const Token t = lx.expect(Tok::number, "number");
  return negative ? -t.value : t.value;
}

inline std::vector<int> parse_side(LineLexer& lx, const InteractionScheme& s) {
  std::vector<int> counts(s.species.size(), 0);
  if (lx.peek().kind == Tok::number && lx.peek().text == "0") {
    lx.next();
    return counts;
  }
  do {
    int count = 1;
    if (lx.peek().kind == Tok::number) {
      const Token t = lx.next();
      if (t.value < 1 || t.value != std::floor(t.value) || t.value > 1e6)
        lx.fail("stoichiometric count must be a positive integer", t);
      count = static_cast<int>(t.value);
    }
    const Token name = lx.expect(Tok::ident, "species name");
    auto idx = s.species_index(name.text);
    if (!idx) lx.fail("unknown species '" + name.text + "'", name);
    counts[*idx] += count;
  } while (lx.accept(Tok::plus));
  return counts;
}

}  // namespace detail

inline InteractionScheme parse_model(std::string_view text) {
  using namespace detail;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<SourceLine> top;
  std::map<std::string, std::vector<SourceLine>> sections;
  static const std::set<std::string> known = {"parameters", "species", "aggregates", "reactions"};
  std::vector<SourceLine>* current = &top;
  bool saw_header = false;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::size_t l = 0;
    while (l < raw.size() && std::isspace(static_cast<unsigned char>(raw[l]))) ++l;
    std::size_t r = raw.size();
    while (r > l && std::isspace(static_cast<unsigned char>(raw[r - 1]))) --r;
    const std::string_view line = raw.substr(l, r - l);

    if (!saw_header) {
      if (line.empty()) continue;
      if (line != kModelFileHeader)
        throw ParseError("expected version line '" + std::string(kModelFileHeader) + "'", line_no, 1);
      saw_header = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, int(l) + 1);
      const std::string name(line.substr(1, line.size() - 2));
      if (!known.count(name)) throw ParseError("unknown section '" + name + "'", line_no, int(l) + 1);
      if (sections.count(name)) throw ParseError("duplicate section '" + name + "'", line_no, int(l) + 1);
      current = &sections[name];
      continue;
    }
    current->push_back({line, line_no, static_cast<int>(l)});
  }
  if (!saw_header) throw ParseError("empty model file", 1, 1);

  InteractionScheme s;
  for (const auto& sl : top) {
    const auto eq = sl.text.find('=');
    const std::string key(eq == std::string_view::npos ? sl.text : sl.text.substr(0, eq));
    std::string k = key;
    while (!k.empty() && std::isspace(static_cast<unsigned char>(k.back()))) k.pop_back();
    if (k != "name") throw ParseError("unknown key '" + k + "'", sl.line, sl.offset + 1);
    if (eq == std::string_view::npos) throw ParseError("expected '='", sl.line, sl.offset + 1);
    std::string_view v = sl.text.substr(eq + 1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    s.name = std::string(v);
  }

  for (const auto& sl : sections["parameters"]) {
    LineLexer lx(sl.text, sl.line, sl.offset);
    const Token name = lx.expect(Tok::ident, "parameter name");
    lx.expect(Tok::equals, "'='");
    const double v = parse_signed_number(lx);
    lx.expect(Tok::end, "end of line");
    if (!s.parameters.emplace(name.text, v).second)
      lx.fail("duplicate parameter '" + name.text + "'", name);
  }

  for (const auto& sl : sections["species"]) {
    LineLexer lx(sl.text, sl.line, sl.offset);
    const Token name = lx.expect(Tok::ident, "species name");
    lx.expect(Tok::end, "end of line");
    if (s.species_index(name.text)) lx.fail("duplicate species '" + name.text + "'", name);
    s.species.push_back({name.text, s.species.size()});
  }

  for (const auto& sl : sections["aggregates"]) {
    LineLexer lx(sl.text, sl.line, sl.offset);
    const Token name = lx.expect(Tok::ident, "aggregate name");
    lx.expect(Tok::equals, "'='");
    Aggregate a{name.text, Vector(s.species.size(), 0.0)};
    do {
      double w = 1.0;
      if (lx.peek().kind == Tok::number || lx.peek().kind == Tok::minus) {
        w = parse_signed_number(lx);
        lx.expect(Tok::star, "'*'");
      }
      const Token sp = lx.expect(Tok::ident, "species name");
      auto idx = s.species_index(sp.text);
      if (!idx) lx.fail("unknown species '" + sp.text + "'", sp);
      a.weights[*idx] += w;
    } while (lx.accept(Tok::plus));
    lx.expect(Tok::end, "end of line");
    if (s.aggregate_index(name.text)) lx.fail("duplicate aggregate '" + name.text + "'", name);
    s.aggregates.push_back(std::move(a));
  }

  for (const auto& sl : sections["reactions"]) {
    LineLexer lx(sl.text, sl.line, sl.offset);
    Reaction r;
    r.label = lx.expect(Tok::ident, "reaction label").text;
    lx.expect(Tok::colon, "':'");
    r.reactants = parse_side(lx, s);
    lx.expect(Tok::arrow, "'->'");
    r.products = parse_side(lx, s);
    lx.expect(Tok::at, "'@'");
    r.rate.constant = lx.expect(Tok::ident, "rate constant name").text;
    while (lx.accept(Tok::star)) {
      const Token f = lx.expect(Tok::ident, "rate factor");
      RateFactor rf;
      if (auto i = s.species_index(f.text)) {
        rf = {SourceKind::species, *i, 1};
      } else if (auto a = s.aggregate_index(f.text)) {
        rf = {SourceKind::aggregate, *a, 1};
      } else {
        lx.fail("unresolved source '" + f.text + "'", f);
      }
      if (lx.accept(Tok::caret)) {
        const Token e = lx.expect(Tok::number, "exponent");
        if (e.value < 1 || e.value != std::floor(e.value) || e.value > 64)
          lx.fail("exponent must be a positive integer", e);
        rf.exponent = static_cast<int>(e.value);
      }
      r.rate.factors.push_back(rf);
    }
    lx.expect(Tok::end, "end of line");
    s.reactions.push_back(std::move(r));
  }
  return s;
}

inline std::string render_model(const InteractionScheme& s) {
  using detail::format_number;
  std::ostringstream out;
  out << kModelFileHeader << '\n';
  if (!s.name.empty()) out << "name = " << s.name << '\n';

  out << "\n[parameters]\n";
  for (const auto& [k, v] : s.parameters) out << k << " = " << format_number(v) << '\n';

  out << "\n[species]\n";
  for (const auto& sp : s.species) out << sp.name << '\n';

  if (!s.aggregates.empty()) {
    out << "\n[aggregates]\n";
    for (const auto& a : s.aggregates) {
      out << a.name << " =";
      bool first = true;
      for (std::size_t i = 0; i < a.weights.size(); ++i) {
        if (a.weights[i] == 0.0) continue;
        out << (first ? " " : " + ") << format_number(a.weights[i]) << '*' << s.species[i].name;
        first = false;
      }
      out << '\n';
    }
  }

  auto side = [&](const std::vector<int>& counts) {
    std::string txt;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      if (!txt.empty()) txt += " + ";
      if (counts[i] != 1) txt += std::to_string(counts[i]) + " ";
      txt += s.species[i].name;
    }
    return txt.empty() ? std::string("0") : txt;
  };

  out << "\n[reactions]\n";
  for (const auto& r : s.reactions) {
    out << r.label << ": " << side(r.reactants) << " -> " << side(r.products) << " @ "
        << r.rate.constant;
    for (const auto& f : r.rate.factors) {
      out << " * "
          << (f.kind == SourceKind::species ? s.species[f.index].name : s.aggregates[f.index].name);
      if (f.exponent != 1) out << '^' << f.exponent;
    }
    out << '\n';
  }
  return out.str();
}

// Parses and validates a model file. Syntax errors carry line/column; a
// structurally invalid scheme raises ConfigError listing every violation.
inline InteractionScheme load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  InteractionScheme s;
  try {
    s = parse_model(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), e.column(), path);
  }
  require_valid(s);
  return s;
}

}  // namespace onestep
