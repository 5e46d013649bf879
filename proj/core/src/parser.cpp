#include "spalift/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

namespace spalift {
namespace {

enum class Tok {
  Word,    // identifier or bare state id (may start with a digit)
  Number,  // numeric literal
  LBrace, RBrace, LParen, RParen,
  Semi, Colon, Comma, Minus, Arrow, ParPar,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    int line = line_, col = col_;
    if (pos_ >= text_.size()) return {Tok::End, "", line, col};
    char c = text_[pos_];
    auto one = [&](Tok k) {
      advance();
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case ';': return one(Tok::Semi);
      case ':': return one(Tok::Colon);
      case ',': return one(Tok::Comma);
      case '|':
        if (peek(1) == '|') {
          advance();
          advance();
          return {Tok::ParPar, "||", line, col};
        }
        throw ParseError(line, col, "stray '|'");
      case '-':
        if (peek(1) == '>') {
          advance();
          advance();
          return {Tok::Arrow, "->", line, col};
        }
        advance();
        return {Tok::Minus, "-", line, col};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string num;
      bool alpha = false;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
          if (std::isalpha(static_cast<unsigned char>(d)) && d != 'e' && d != 'E')
            alpha = true;
          num += d;
          advance();
          continue;
        }
        // exponent sign
        if ((d == '+' || d == '-') && !num.empty() &&
            (num.back() == 'e' || num.back() == 'E') && !alpha) {
          num += d;
          advance();
          continue;
        }
        break;
      }
      // Identifiers may start with a digit (state ids like "1" or "2a").
      return {alpha && !looks_numeric(num) ? Tok::Word : Tok::Number, num, line, col};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string w;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        w += text_[pos_];
        advance();
      }
      return {Tok::Word, w, line, col};
    }
    throw ParseError(line, col, std::string("unexpected character '") + c + "'");
  }

 private:
  static bool looks_numeric(const std::string& s) {
    double v;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  }
  char peek(std::size_t off) const {
    return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      break;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class TokenStream {
 public:
  explicit TokenStream(const std::string& text) {
    Lexer lex(text);
    for (;;) {
      Token t = lex.next();
      toks_.push_back(t);
      if (t.kind == Tok::End) break;
    }
  }
  const Token& peek(std::size_t off = 0) const {
    std::size_t i = std::min(pos_ + off, toks_.size() - 1);
    return toks_[i];
  }
  Token take() {
    Token t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  Token expect(Tok kind, const std::string& what) {
    const Token& t = peek();
    if (t.kind != kind)
      throw ParseError(t.line, t.col, "expected " + what + ", got '" + t.text + "'");
    return take();
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    take();
    return true;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string expect_id(TokenStream& ts, const std::string& what) {
  const Token& t = ts.peek();
  if (t.kind != Tok::Word && t.kind != Tok::Number)
    throw ParseError(t.line, t.col, "expected " + what + ", got '" + t.text + "'");
  return ts.take().text;
}

double expect_rate(TokenStream& ts, const char* what) {
  const Token& t = ts.peek();
  bool neg = ts.accept(Tok::Minus);
  const Token& n = ts.peek();
  if (n.kind != Tok::Number)
    throw ParseError(n.line, n.col, std::string("expected ") + what);
  double v = std::strtod(ts.take().text.c_str(), nullptr);
  if (neg) v = -v;
  if (!(v > 0.0))
    throw ParseError(t.line, t.col, std::string("non-positive ") + what);
  return v;
}

struct PendingProcess {
  SequentialProcess proc;
  int line = 0;
};

void note_state(SequentialProcess& p, const StateId& s) {
  if (!p.has_state(s)) p.states.push_back(s);
}

PendingProcess parse_process(TokenStream& ts) {
  Token kw = ts.take();  // "process" already checked by caller
  PendingProcess out;
  out.line = kw.line;
  const Token& name = ts.peek();
  out.proc.name = expect_id(ts, "process name");
  if (!std::isalpha(static_cast<unsigned char>(out.proc.name[0])) && out.proc.name[0] != '_')
    throw ParseError(name.line, name.col, "process name must start with a letter");
  ts.expect(Tok::LBrace, "'{'");
  const Token& init_kw = ts.peek();
  if (init_kw.kind != Tok::Word || init_kw.text != "initial")
    throw ParseError(init_kw.line, init_kw.col, "expected 'initial'");
  ts.take();
  out.proc.initial = expect_id(ts, "initial state");
  note_state(out.proc, out.proc.initial);
  ts.expect(Tok::Semi, "';'");
  while (!ts.accept(Tok::RBrace)) {
    LocalTransition t;
    t.source = expect_id(ts, "source state");
    ts.expect(Tok::Minus, "'-('");
    ts.expect(Tok::LParen, "'-('");
    t.action = expect_id(ts, "action");
    ts.expect(Tok::Comma, "','");
    t.rate = expect_rate(ts, "rate");
    ts.expect(Tok::RParen, "')->'");
    ts.expect(Tok::Arrow, "')->'");
    t.target = expect_id(ts, "target state");
    ts.expect(Tok::Semi, "';'");
    note_state(out.proc, t.source);
    note_state(out.proc, t.target);
    out.proc.transitions.push_back(std::move(t));
  }
  return out;
}

struct ExprParser {
  TokenStream& ts;
  SystemBuilder& builder;
  const std::vector<PendingProcess>& procs;
  std::vector<bool>& used;

  int primary() {
    const Token& t = ts.peek();
    if (ts.accept(Tok::LParen)) {
      int id = chain();
      ts.expect(Tok::RParen, "')'");
      return id;
    }
    if (t.kind != Tok::Word)
      throw ParseError(t.line, t.col, "expected process name or '('");
    std::string name = ts.take().text;
    for (std::size_t i = 0; i < procs.size(); ++i) {
      if (procs[i].proc.name != name) continue;
      if (used[i])
        throw ParseError(t.line, t.col, "process " + name + " used twice in system");
      used[i] = true;
      return builder.leaf(procs[i].proc);
    }
    throw ParseError(t.line, t.col, "undefined process " + name);
  }

  int chain() {
    std::vector<int> operands{primary()};
    std::vector<std::set<Action>> syncs;
    while (ts.accept(Tok::ParPar)) {
      ts.expect(Tok::LBrace, "'{'");
      std::set<Action> sync;
      if (!ts.accept(Tok::RBrace)) {
        for (;;) {
          sync.insert(expect_id(ts, "action"));
          if (ts.accept(Tok::RBrace)) break;
          ts.expect(Tok::Comma, "',' or '}'");
        }
      }
      syncs.push_back(std::move(sync));
      operands.push_back(primary());
    }
    // Right-nested normalisation; each operator keeps its own sync set.
    int acc = operands.back();
    for (int i = static_cast<int>(syncs.size()) - 1; i >= 0; --i)
      acc = builder.compose(operands[i], acc, syncs[i]);
    return acc;
  }
};

GlobalState parse_tuple(TokenStream& ts) {
  ts.expect(Tok::LParen, "'('");
  GlobalState s;
  if (!ts.accept(Tok::RParen)) {
    for (;;) {
      s.push_back(expect_id(ts, "state id"));
      if (ts.accept(Tok::RParen)) break;
      ts.expect(Tok::Comma, "',' or ')'");
    }
  }
  return s;
}

TransitionKey parse_key(TokenStream& ts) {
  TransitionKey k;
  k.source = parse_tuple(ts);
  ts.expect(Tok::Minus, "'-'");
  k.action = expect_id(ts, "action");
  ts.expect(Tok::Arrow, "'->'");
  k.target = parse_tuple(ts);
  return k;
}

}  // namespace

SpaSystem parse_system(const std::string& text) {
  TokenStream ts(text);
  std::vector<PendingProcess> procs;
  for (;;) {
    const Token& t = ts.peek();
    if (t.kind == Tok::Word && t.text == "process") {
      PendingProcess p = parse_process(ts);
      for (const auto& q : procs)
        if (q.proc.name == p.proc.name)
          throw ParseError(p.line, 1, "duplicate process definition " + p.proc.name);
      procs.push_back(std::move(p));
      continue;
    }
    break;
  }
  const Token& sys_kw = ts.peek();
  if (sys_kw.kind != Tok::Word || sys_kw.text != "system")
    throw ParseError(sys_kw.line, sys_kw.col, "expected 'process' or 'system'");
  ts.take();
  ts.expect(Tok::Colon, "':'");
  SystemBuilder builder;
  std::vector<bool> used(procs.size(), false);
  ExprParser ep{ts, builder, procs, used};
  int root = ep.chain();
  ts.expect(Tok::Semi, "';'");
  const Token& end = ts.peek();
  if (end.kind != Tok::End)
    throw ParseError(end.line, end.col, "trailing input after system line");
  try {
    return builder.finish(root);
  } catch (const ModelError& e) {
    throw ParseError(sys_kw.line, sys_kw.col, e.what());
  }
}

namespace {

std::string fmt_rate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void serialize_expr(const SpaSystem& sys, int id, std::ostringstream& out) {
  const SpaSystem::Node& n = sys.node(id);
  if (n.is_leaf()) {
    out << sys.process(n.leaf).name;
    return;
  }
  out << "( ";
  serialize_expr(sys, n.left, out);
  out << " ||{";
  bool first = true;
  for (const Action& a : n.sync) {
    out << (first ? " " : ", ") << a;
    first = false;
  }
  out << (first ? "} " : " } ");
  serialize_expr(sys, n.right, out);
  out << " )";
}

}  // namespace

std::string serialize_system(const SpaSystem& sys) {
  std::ostringstream out;
  for (int i = 0; i < sys.leaf_count(); ++i) {
    const SequentialProcess& p = sys.process(i);
    out << "process " << p.name << " {\n";
    out << "  initial " << p.initial << " ;\n";
    for (const LocalTransition& t : p.transitions)
      out << "  " << t.source << " -( " << t.action << " , " << fmt_rate(t.rate)
          << " )-> " << t.target << " ;\n";
    out << "}\n\n";
  }
  out << "system : ";
  std::ostringstream expr;
  serialize_expr(sys, sys.root(), expr);
  out << expr.str() << " ;\n";
  return out.str();
}

void ModificationMap::set(const TransitionKey& k, double factor) {
  entries_[k] = factor;
}

double ModificationMap::factor(const TransitionKey& k) const {
  auto it = entries_.find(k);
  return it == entries_.end() ? 1.0 : it->second;
}

ModificationMap parse_factors(const std::string& text, const FlatTS& flat) {
  TokenStream ts(text);
  ModificationMap map;
  while (ts.peek().kind != Tok::End) {
    const Token& at = ts.peek();
    TransitionKey k = parse_key(ts);
    ts.expect(Tok::Colon, "':'");
    double f = expect_rate(ts, "factor");
    const FlatTransition* t = flat.find(k);
    if (!t)
      throw ParseError(at.line, at.col, "unknown transition " + format_key(k));
    if (t->is_global_selfloop())
      throw ParseError(at.line, at.col,
                       "factor on a global selfloop is not liftable: " + format_key(k));
    if (map.contains(k))
      throw ParseError(at.line, at.col, "duplicate factor for " + format_key(k));
    map.set(k, f);
  }
  return map;
}

TransitionKey parse_transition_key(const std::string& text) {
  TokenStream ts(text);
  TransitionKey k = parse_key(ts);
  const Token& end = ts.peek();
  if (end.kind != Tok::End)
    throw ParseError(end.line, end.col, "trailing input after transition key");
  return k;
}

}  // namespace spalift
