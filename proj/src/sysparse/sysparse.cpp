#include "attrakt/sysparse.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace attrakt {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + message
                                  : message),
      line_(line),
      column_(column) {}

std::vector<double> PolySystem::Eval(std::span<const double> x) const {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].Evaluate(x);
  return out;
}

namespace {

constexpr int kMaxPower = 64;

enum class Tok { kNumber, kIdent, kPlus, kMinus, kStar, kCaret, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::string_view text;
  int column;
};

std::vector<Token> Tokenize(std::string_view s, int line, int col0) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const int col = col0 + static_cast<int>(i);
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        } else {
          throw ParseError("malformed exponent in number literal", line, col);
        }
      }
      if (s.substr(i, j - i) == ".") throw ParseError("malformed number literal", line, col);
      out.push_back({Tok::kNumber, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::kIdent, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::kPlus; break;
      case '-': kind = Tok::kMinus; break;
      case '*': kind = Tok::kStar; break;
      case '^': kind = Tok::kCaret; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back({kind, s.substr(i, 1), col});
    ++i;
  }
  out.push_back({Tok::kEnd, {}, col0 + static_cast<int>(s.size())});
  return out;
}

class ExprParser {
 public:
  ExprParser(std::vector<Token> tokens, const std::vector<std::string>& names, int line)
      : tokens_(std::move(tokens)), names_(names), line_(line) {}

  Polynomial ParseAll() {
    if (Peek().kind == Tok::kEnd) Fail("empty expression");
    Polynomial p = Expr();
    if (Peek().kind != Tok::kEnd) Fail("unexpected token '" + std::string(Peek().text) + "'");
    return p;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() { return tokens_[pos_++]; }
  [[noreturn]] void Fail(const std::string& msg) const { throw ParseError(msg, line_, Peek().column); }
  int nvars() const { return static_cast<int>(names_.size()); }

  Polynomial Expr() {
    Polynomial acc = Term();
    while (Peek().kind == Tok::kPlus || Peek().kind == Tok::kMinus) {
      const bool minus = Next().kind == Tok::kMinus;
      Polynomial rhs = Term();
      if (minus) acc -= rhs;
      else acc += rhs;
    }
    return acc;
  }

  Polynomial Term() {
    Polynomial acc = Factor();
    while (Peek().kind == Tok::kStar) {
      Next();
      acc = acc * Factor();
    }
    return acc;
  }

  Polynomial Factor() {
    Polynomial b = Base();
    if (Peek().kind == Tok::kCaret) {
      Next();
      const Token& t = Peek();
      if (t.kind != Tok::kNumber) Fail("exponent must be a nonnegative integer literal");
      for (char ch : t.text) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
          Fail("exponent must be a nonnegative integer literal");
        }
      }
      int k = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), k);
      if (ec != std::errc() || k > kMaxPower) Fail("exponent out of range");
      Next();
      b = b.Pow(k);
    }
    return b;
  }

  Polynomial Base() {
    const Token& t = Peek();
    switch (t.kind) {
      case Tok::kNumber: {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v)) {
          Fail("invalid number '" + std::string(t.text) + "'");
        }
        Next();
        return Polynomial::Constant(nvars(), v);
      }
      case Tok::kIdent: {
        for (int i = 0; i < nvars(); ++i) {
          if (names_[i] == t.text) {
            Next();
            return Polynomial::Var(nvars(), i);
          }
        }
        Fail("unknown identifier '" + std::string(t.text) + "'");
      }
      case Tok::kLParen: {
        Next();
        Polynomial inner = Expr();
        if (Peek().kind != Tok::kRParen) Fail("expected ')'");
        Next();
        return inner;
      }
      case Tok::kMinus:
        Next();
        return -Factor();
      case Tok::kEnd:
        Fail("unexpected end of expression");
      default:
        Fail("unexpected token '" + std::string(t.text) + "'");
    }
  }

  std::vector<Token> tokens_;
  const std::vector<std::string>& names_;
  int line_;
  std::size_t pos_ = 0;
};

Polynomial ParseAt(std::string_view text, const std::vector<std::string>& names, int line,
                   int col0) {
  ExprParser parser(Tokenize(text, line, col0), names, line);
  return parser.ParseAll();
}

std::string_view StripComment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int ColumnOf(std::string_view line, std::string_view part) {
  return static_cast<int>(part.data() - line.data()) + 1;
}

std::vector<std::string_view> SplitLines(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= contents.size()) {
    auto nl = contents.find('\n', start);
    if (nl == std::string_view::npos) nl = contents.size();
    std::string_view l = contents.substr(start, nl - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    start = nl + 1;
  }
  return lines;
}

bool IsIdentifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

Polynomial ParsePolynomial(std::string_view text, const std::vector<std::string>& var_names,
                           int line) {
  return ParseAt(text, var_names, line, 1);
}

PolySystem ParseSystem(std::string_view contents) {
  PolySystem sys;
  std::vector<bool> seen;
  bool have_vars = false;
  const auto lines = SplitLines(contents);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const std::string_view raw = lines[li];
    const std::string_view body = Trim(StripComment(raw));
    if (body.empty()) continue;

    if (body.starts_with("vars:")) {
      if (have_vars) throw ParseError("duplicate 'vars:' declaration", lineno, ColumnOf(raw, body));
      have_vars = true;
      std::string_view rest = body.substr(5);
      std::set<std::string, std::less<>> names;
      while (true) {
        rest = Trim(rest);
        if (rest.empty()) break;
        auto sp = rest.find_first_of(" \t");
        std::string_view name = rest.substr(0, sp);
        if (!IsIdentifier(name)) {
          throw ParseError("invalid variable name '" + std::string(name) + "'", lineno,
                           ColumnOf(raw, name));
        }
        if (!names.insert(std::string(name)).second) {
          throw ParseError("duplicate variable '" + std::string(name) + "'", lineno,
                           ColumnOf(raw, name));
        }
        sys.var_names.emplace_back(name);
        if (sp == std::string_view::npos) break;
        rest = rest.substr(sp);
      }
      if (sys.var_names.empty()) throw ParseError("no variables declared", lineno, ColumnOf(raw, body));
      sys.f.assign(sys.var_names.size(), Polynomial(sys.nvars()));
      seen.assign(sys.var_names.size(), false);
      continue;
    }

    if (body.starts_with("dot") && body.size() > 3 && std::isspace(static_cast<unsigned char>(body[3]))) {
      if (!have_vars) throw ParseError("'dot' before 'vars:'", lineno, ColumnOf(raw, body));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected '='", lineno, ColumnOf(raw, body) + static_cast<int>(body.size()));
      const std::string_view lhs = Trim(body.substr(3, eq - 3));
      int idx = -1;
      for (int i = 0; i < sys.nvars(); ++i) {
        if (sys.var_names[i] == lhs) idx = i;
      }
      if (idx < 0) {
        throw ParseError("'dot' of undeclared variable '" + std::string(lhs) + "'", lineno,
                         lhs.empty() ? ColumnOf(raw, body) : ColumnOf(raw, lhs));
      }
      if (seen[idx]) {
        throw ParseError("duplicate equation for '" + std::string(lhs) + "'", lineno, ColumnOf(raw, lhs));
      }
      const std::string_view rhs = body.substr(eq + 1);
      sys.f[idx] = ParseAt(rhs, sys.var_names, lineno, ColumnOf(raw, rhs));
      seen[idx] = true;
      continue;
    }
    throw ParseError("expected 'vars:' or 'dot <var> = <expr>'", lineno, ColumnOf(raw, body));
  }
  if (!have_vars) throw ParseError("missing 'vars:' declaration", 0, 0);
  for (int i = 0; i < sys.nvars(); ++i) {
    if (!seen[i]) throw ParseError("missing equation for '" + sys.var_names[i] + "'", 0, 0);
  }
  const std::vector<double> origin(sys.nvars(), 0.0);
  for (int i = 0; i < sys.nvars(); ++i) {
    const double v = sys.f[i].Evaluate(origin);
    if (std::abs(v) > 1e-12) {
      throw ParseError("origin is not an equilibrium: f_" + std::to_string(i + 1) + "(0) = " +
                           FormatDouble(v),
                       0, 0);
    }
  }
  return sys;
}

int RunConfig::MultiplierDegree(const std::string& name) const {
  auto it = deg_multipliers.find(name);
  return it == deg_multipliers.end() ? -1 : it->second;
}

void RunConfig::Validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (deg_vn < 2 || deg_vn % 2 != 0) fail("deg_vn must be an even number >= 2");
  if (deg_r < 2 || deg_r % 2 != 0) fail("deg_r must be an even number >= 2");
  if (!(gamma_lo > 0.0) || !(gamma_hi > gamma_lo)) fail("need 0 < gamma_lo < gamma_hi");
  if (!(bisect_tol > 0.0)) fail("bisect_tol must be positive");
  if (max_outer_iters < 1) fail("max_outer_iters must be >= 1");
  if (!(eps_margin > 0.0)) fail("eps_margin must be positive");
  if (kappa < 0.0) fail("kappa must be nonnegative");
  if (k_compact < 0) fail("k_compact must be nonnegative");
  if (!(tol_feas > 0.0) || !(tol_gap > 0.0)) fail("solver tolerances must be positive");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(sim_dt > 0.0) || sim_T < sim_dt) fail("need 0 < sim_dt <= sim_T");
  for (const auto& [k, v] : deg_multipliers) {
    if (v < 0) fail("negative degree for multiplier " + k);
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::Entries() const {
  std::vector<std::pair<std::string, std::string>> e = {
      {"deg_vn", std::to_string(deg_vn)},
      {"deg_r", std::to_string(deg_r)},
  };
  for (const auto& [k, v] : deg_multipliers) e.emplace_back("deg_" + k, std::to_string(v));
  auto d = [](double v) { return FormatDouble(v); };
  e.insert(e.end(), {
                        {"gamma_lo", d(gamma_lo)},
                        {"gamma_hi", d(gamma_hi)},
                        {"bisect_tol", d(bisect_tol)},
                        {"max_outer_iters", std::to_string(max_outer_iters)},
                        {"stop_tol", d(stop_tol)},
                        {"eps_margin", d(eps_margin)},
                        {"kappa", d(kappa)},
                        {"k_compact", std::to_string(k_compact)},
                        {"tol_feas", d(tol_feas)},
                        {"tol_gap", d(tol_gap)},
                        {"max_iters", std::to_string(max_iters)},
                        {"seed", std::to_string(seed)},
                        {"n_boundary", std::to_string(n_boundary)},
                        {"n_interior", std::to_string(n_interior)},
                        {"n_decrease", std::to_string(n_decrease)},
                        {"n_rational", std::to_string(n_rational)},
                        {"sim_T", d(sim_T)},
                        {"sim_dt", d(sim_dt)},
                        {"conv_tol", d(conv_tol)},
                        {"search_radius", d(search_radius)},
                    });
  return e;
}

namespace {

template <typename T>
T ParseNumber(std::string_view v, int line, int col) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("invalid value '" + std::string(v) + "'", line, col);
  }
  return out;
}

const std::set<std::string, std::less<>> kMultiplierNames = {"p", "m0", "m1", "m2", "m3", "s", "c"};

}  // namespace

RunConfig ParseConfig(std::string_view contents, RunConfig cfg) {
  const auto lines = SplitLines(contents);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const std::string_view raw = lines[li];
    const std::string_view body = Trim(StripComment(raw));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno, ColumnOf(raw, body));
    const std::string_view key = Trim(body.substr(0, eq));
    const std::string_view val = Trim(body.substr(eq + 1));
    const int vcol = val.empty() ? ColumnOf(raw, body) : ColumnOf(raw, val);
    auto as_int = [&] { return ParseNumber<int>(val, lineno, vcol); };
    auto as_double = [&] { return ParseNumber<double>(val, lineno, vcol); };

    if (key == "deg_vn") cfg.deg_vn = as_int();
    else if (key == "deg_r") cfg.deg_r = as_int();
    else if (key == "gamma_lo") cfg.gamma_lo = as_double();
    else if (key == "gamma_hi") cfg.gamma_hi = as_double();
    else if (key == "bisect_tol") cfg.bisect_tol = as_double();
    else if (key == "max_outer_iters") cfg.max_outer_iters = as_int();
    else if (key == "stop_tol") cfg.stop_tol = as_double();
    else if (key == "eps_margin") cfg.eps_margin = as_double();
    else if (key == "kappa") cfg.kappa = as_double();
    else if (key == "k_compact") cfg.k_compact = as_int();
    else if (key == "tol_feas") cfg.tol_feas = as_double();
    else if (key == "tol_gap") cfg.tol_gap = as_double();
    else if (key == "max_iters") cfg.max_iters = as_int();
    else if (key == "seed") cfg.seed = ParseNumber<std::uint64_t>(val, lineno, vcol);
    else if (key == "n_boundary") cfg.n_boundary = as_int();
    else if (key == "n_interior") cfg.n_interior = as_int();
    else if (key == "n_decrease") cfg.n_decrease = as_int();
    else if (key == "n_rational") cfg.n_rational = as_int();
    else if (key == "sim_T") cfg.sim_T = as_double();
    else if (key == "sim_dt") cfg.sim_dt = as_double();
    else if (key == "conv_tol") cfg.conv_tol = as_double();
    else if (key == "search_radius") cfg.search_radius = as_double();
    else if (key.starts_with("deg_") && kMultiplierNames.contains(key.substr(4))) {
      cfg.deg_multipliers[std::string(key.substr(4))] = as_int();
    } else {
      throw ParseError("unknown config key '" + std::string(key) + "'", lineno, ColumnOf(raw, key));
    }
  }
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0, 0);
  }
  return cfg;
}

std::vector<Polynomial> ParsePieces(std::string_view contents,
                                    const std::vector<std::string>& var_names) {
  std::vector<Polynomial> pieces;
  const auto lines = SplitLines(contents);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const std::string_view raw = lines[li];
    std::string_view body = Trim(StripComment(raw));
    if (body.empty()) continue;
    if (body.starts_with("piece")) {
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected '='", lineno, ColumnOf(raw, body));
      body = body.substr(eq + 1);
    }
    pieces.push_back(ParseAt(body, var_names, lineno, ColumnOf(raw, body)));
  }
  if (pieces.empty()) throw ParseError("pieces file defines no pieces", 0, 0);
  return pieces;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace attrakt
