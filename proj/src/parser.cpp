#include "symdl/parser.hpp"

#include <cctype>
#include <optional>
#include <set>

#include "symdl/error.hpp"

namespace symdl {

const RelationDecl& Program::decl(const std::string& rel) const {
  auto it = relations.find(rel);
  if (it == relations.end()) fail(errc::unknown_predicate, "unknown relation " + rel);
  return it->second;
}

namespace {

enum class Tok {
  ident,      // possibly dotted: s.2.Equals
  directive,  // .decl etc (text without the dot)
  number,
  string,
  punct,  // text holds the punctuation: ( ) [ ] { } , . ! @ * + - / = != < <= > >= :-
  eof,
};

struct Token {
  Tok kind = Tok::eof;
  std::string text;
  uint64_t number = 0;
  int line = 1, col = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  [[noreturn]] void err(const std::string& msg) const { throw SyntaxError(line_, col_, msg); }

  char cur() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char ahead(size_t n = 1) const { return pos_ + n < src_.size() ? src_[pos_ + n] : '\0'; }

  void bump() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_trivia() {
    for (;;) {
      char c = cur();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else if (c == '/' && ahead() == '/') {
        while (cur() && cur() != '\n') bump();
      } else if (c == '/' && ahead() == '*') {
        bump();
        bump();
        while (cur() && !(cur() == '*' && ahead() == '/')) bump();
        if (!cur()) err("unterminated block comment");
        bump();
        bump();
      } else {
        return;
      }
    }
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void advance() {
    skip_trivia();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    char c = cur();
    if (!c) {
      tok_.kind = Tok::eof;
      return;
    }
    if (ident_start(c)) {
      std::string s;
      while (ident_char(cur())) {
        s += cur();
        bump();
      }
      // Dotted continuation for component-instance names.
      while (cur() == '.' && ident_char(ahead())) {
        s += '.';
        bump();
        while (ident_char(cur())) {
          s += cur();
          bump();
        }
      }
      tok_.kind = Tok::ident;
      tok_.text = std::move(s);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      uint64_t n = 0;
      while (std::isdigit(static_cast<unsigned char>(cur()))) {
        uint64_t d = static_cast<uint64_t>(cur() - '0');
        if (n > (UINT64_MAX - d) / 10) err("number literal out of range");
        n = n * 10 + d;
        bump();
      }
      tok_.kind = Tok::number;
      tok_.number = n;
      return;
    }
    if (c == '"') {
      bump();
      std::string s;
      while (cur() && cur() != '"') {
        char x = cur();
        if (x == '\\') {
          bump();
          char e = cur();
          if (e == 'n') s += '\n';
          else if (e == 't') s += '\t';
          else if (e == '"') s += '"';
          else if (e == '\\') s += '\\';
          else err("bad escape in string literal");
          bump();
        } else {
          s += x;
          bump();
        }
      }
      if (!cur()) err("unterminated string literal");
      bump();
      tok_.kind = Tok::string;
      tok_.text = std::move(s);
      return;
    }
    if (c == '.') {
      if (ident_start(ahead())) {
        bump();
        std::string s;
        while (ident_char(cur())) {
          s += cur();
          bump();
        }
        tok_.kind = Tok::directive;
        tok_.text = std::move(s);
        return;
      }
      bump();
      tok_.kind = Tok::punct;
      tok_.text = ".";
      return;
    }
    if (c == ':' && ahead() == '-') {
      bump();
      bump();
      tok_.kind = Tok::punct;
      tok_.text = ":-";
      return;
    }
    if (c == '!' && ahead() == '=') {
      bump();
      bump();
      tok_.kind = Tok::punct;
      tok_.text = "!=";
      return;
    }
    if ((c == '<' || c == '>') && ahead() == '=') {
      std::string s{c, '='};
      bump();
      bump();
      tok_.kind = Tok::punct;
      tok_.text = s;
      return;
    }
    static const std::string singles = "()[]{},.!@*+-/=<>:";
    if (singles.find(c) != std::string::npos) {
      bump();
      tok_.kind = Tok::punct;
      tok_.text = std::string(1, c);
      return;
    }
    err(std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Program run() {
    while (lex_.peek().kind != Tok::eof) top_item();
    flatten();
    validate_program(prog_);
    return std::move(prog_);
  }

private:
  [[noreturn]] void err_at(const Token& t, const std::string& msg) {
    throw SyntaxError(t.line, t.col, msg);
  }

  Token expect_punct(const std::string& p) {
    Token t = lex_.take();
    if (t.kind != Tok::punct || t.text != p)
      err_at(t, "expected '" + p + "'");
    return t;
  }

  Token expect_ident() {
    Token t = lex_.take();
    if (t.kind != Tok::ident) err_at(t, "expected identifier");
    return t;
  }

  bool at_punct(const std::string& p) {
    return lex_.peek().kind == Tok::punct && lex_.peek().text == p;
  }

  void top_item() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::directive) {
      directive();
    } else {
      prog_.rules.push_back(rule());
    }
  }

  void directive() {
    Token d = lex_.take();
    if (d.text == "decl") {
      RelationDecl decl = parse_decl(d);
      add_decl(cur_comp_ ? cur_comp_->decls : top_decls_, decl, d);
    } else if (d.text == "input" || d.text == "output") {
      if (cur_comp_) err_at(d, "." + d.text + " is not allowed inside a component");
      Token name = expect_ident();
      io_marks_.push_back({name.text, d.text == "input", name});
    } else if (d.text == "const") {
      if (cur_comp_) err_at(d, ".const is not allowed inside a component");
      Token name = expect_ident();
      expect_punct("=");
      Token num = lex_.take();
      if (num.kind != Tok::number) err_at(num, "expected number");
      prog_.consts[name.text] = num.number;
    } else if (d.text == "comp") {
      if (cur_comp_) err_at(d, "components do not nest");
      Token name = expect_ident();
      if (prog_.components.count(name.text)) err_at(name, "duplicate component " + name.text);
      ComponentTemplate comp;
      comp.name = name.text;
      expect_punct("{");
      cur_comp_ = &comp;
      while (!at_punct("}")) {
        if (lex_.peek().kind == Tok::eof) err_at(lex_.peek(), "unterminated component");
        if (lex_.peek().kind == Tok::directive) directive();
        else comp.rules.push_back(rule());
      }
      expect_punct("}");
      cur_comp_ = nullptr;
      prog_.components.emplace(comp.name, std::move(comp));
    } else if (d.text == "init") {
      if (cur_comp_) err_at(d, ".init is not allowed inside a component");
      Instantiation inst;
      Token name = expect_ident();
      inst.instance = name.text;
      expect_punct("=");
      Token comp = expect_ident();
      inst.component = comp.text;
      if (at_punct("*")) {
        lex_.take();
        Token num = lex_.take();
        if (num.kind != Tok::number) err_at(num, "expected instantiation count");
        inst.count = static_cast<int>(num.number);
      }
      prog_.instantiations.push_back(inst);
    } else {
      err_at(d, "unknown directive ." + d.text);
    }
  }

  RelationDecl parse_decl(const Token& at) {
    RelationDecl decl;
    Token name = expect_ident();
    decl.name = name.text;
    expect_punct("(");
    for (;;) {
      Token col = expect_ident();
      expect_punct(":");
      Token ty = expect_ident();
      ColumnType t;
      if (ty.text == "symbol") t = ColumnType::symbol;
      else if (ty.text == "number") t = ColumnType::number;
      else if (ty.text == "record") t = ColumnType::record;
      else err_at(ty, "unknown column type " + ty.text + " (expected symbol, number, or record)");
      decl.columns.emplace_back(col.text, t);
      if (at_punct(")")) break;
      expect_punct(",");
    }
    expect_punct(")");
    (void)at;
    return decl;
  }

  void add_decl(std::vector<RelationDecl>& out, const RelationDecl& decl, const Token& at) {
    for (const auto& d : out)
      if (d.name == decl.name) err_at(at, "duplicate declaration of " + decl.name);
    out.push_back(decl);
  }

  Rule rule() {
    Rule r;
    Token first = lex_.peek();
    r.line = first.line;
    r.col = first.col;
    r.heads.push_back(atom());
    while (at_punct(",")) {
      lex_.take();
      r.heads.push_back(atom());
    }
    if (at_punct(":-")) {
      lex_.take();
      r.body.push_back(literal());
      while (at_punct(",")) {
        lex_.take();
        r.body.push_back(literal());
      }
    }
    expect_punct(".");
    return r;
  }

  Atom atom() {
    Token name = expect_ident();
    Atom a;
    a.predicate = name.text;
    a.line = name.line;
    a.col = name.col;
    expect_punct("(");
    if (!at_punct(")")) {
      a.args.push_back(term());
      while (at_punct(",")) {
        lex_.take();
        a.args.push_back(term());
      }
    }
    expect_punct(")");
    return a;
  }

  Literal literal() {
    Literal l;
    if (at_punct("!")) {
      lex_.take();
      l.kind = Literal::Kind::negated;
      l.atom = atom();
      return l;
    }
    if (lex_.peek().kind == Tok::ident) {
      // Distinguish an atom from a guard whose left side is a variable.
      Token name = lex_.take();
      if (at_punct("(")) {
        Atom a;
        a.predicate = name.text;
        a.line = name.line;
        a.col = name.col;
        expect_punct("(");
        if (!at_punct(")")) {
          a.args.push_back(term());
          while (at_punct(",")) {
            lex_.take();
            a.args.push_back(term());
          }
        }
        expect_punct(")");
        l.kind = Literal::Kind::atom;
        l.atom = std::move(a);
        return l;
      }
      Term lhs = arith_tail(var_term(name));
      return guard_from(lhs, name);
    }
    Token at = lex_.peek();
    Term lhs = term();
    return guard_from(lhs, at);
  }

  Literal guard_from(Term lhs, const Token& at) {
    Literal l;
    l.kind = Literal::Kind::guard;
    Token op = lex_.take();
    if (op.kind != Tok::punct) err_at(op, "expected comparison operator");
    CmpOp c;
    if (op.text == "=") c = CmpOp::eq;
    else if (op.text == "!=") c = CmpOp::ne;
    else if (op.text == "<") c = CmpOp::lt;
    else if (op.text == "<=") c = CmpOp::le;
    else if (op.text == ">") c = CmpOp::gt;
    else if (op.text == ">=") c = CmpOp::ge;
    else err_at(op, "expected comparison operator, got '" + op.text + "'");
    l.guard.op = c;
    l.guard.lhs = std::move(lhs);
    l.guard.rhs = term();
    l.guard.line = at.line;
    l.guard.col = at.col;
    return l;
  }

  Term var_term(const Token& name) {
    Term t;
    if (name.text == "_") {
      t.kind = Term::Kind::wildcard;
    } else if (name.text == "nil") {
      t.kind = Term::Kind::nil;
    } else {
      t.kind = Term::Kind::variable;
      t.text = name.text;
    }
    t.line = name.line;
    t.col = name.col;
    return t;
  }

  // term := mul (("+"|"-") mul)*
  Term term() { return arith_tail(mul()); }

  Term arith_tail(Term lhs) {
    for (;;) {
      if (at_punct("+") || at_punct("-")) {
        Token op = lex_.take();
        Term rhs = mul();
        Term t;
        t.kind = Term::Kind::binary;
        t.op = op.text[0];
        t.line = op.line;
        t.col = op.col;
        t.args.push_back(std::move(lhs));
        t.args.push_back(std::move(rhs));
        lhs = std::move(t);
      } else {
        return lhs;
      }
    }
  }

  Term mul() {
    Term lhs = primary();
    for (;;) {
      if (at_punct("*") || at_punct("/")) {
        Token op = lex_.take();
        Term rhs = primary();
        Term t;
        t.kind = Term::Kind::binary;
        t.op = op.text[0];
        t.line = op.line;
        t.col = op.col;
        t.args.push_back(std::move(lhs));
        t.args.push_back(std::move(rhs));
        lhs = std::move(t);
      } else {
        return lhs;
      }
    }
  }

  Term primary() {
    Token t = lex_.take();
    switch (t.kind) {
      case Tok::ident:
        return var_term(t);
      case Tok::number: {
        Term x = Term::num(t.number);
        x.line = t.line;
        x.col = t.col;
        return x;
      }
      case Tok::string: {
        Term x = Term::symbol(t.text);
        x.line = t.line;
        x.col = t.col;
        return x;
      }
      case Tok::punct:
        if (t.text == "[") {
          Term x;
          x.kind = Term::Kind::record;
          x.line = t.line;
          x.col = t.col;
          if (!at_punct("]")) {
            x.args.push_back(term());
            while (at_punct(",")) {
              lex_.take();
              x.args.push_back(term());
            }
          }
          expect_punct("]");
          return x;
        }
        if (t.text == "@") {
          Token name = expect_ident();
          Term x;
          x.kind = Term::Kind::functor;
          x.text = name.text;
          x.line = t.line;
          x.col = t.col;
          expect_punct("(");
          if (!at_punct(")")) {
            x.args.push_back(term());
            while (at_punct(",")) {
              lex_.take();
              x.args.push_back(term());
            }
          }
          expect_punct(")");
          return x;
        }
        if (t.text == "(") {
          Term inner = term();
          expect_punct(")");
          return inner;
        }
        err_at(t, "unexpected '" + t.text + "' in term");
      default:
        err_at(t, "unexpected token in term");
    }
  }

  // Expands .init directives: clones component declarations and rules with
  // instance-qualified relation names, then merges everything into the
  // flat program.
  void flatten() {
    for (const RelationDecl& d : top_decls_) {
      if (prog_.relations.count(d.name))
        fail(errc::type, "duplicate declaration of " + d.name);
      prog_.relations.emplace(d.name, d);
    }
    for (const Instantiation& inst : prog_.instantiations) {
      auto comp_it = prog_.components.find(inst.component);
      if (comp_it == prog_.components.end())
        fail(errc::unknown_predicate, "unknown component " + inst.component);
      const ComponentTemplate& comp = comp_it->second;
      if (inst.count < 0) fail(errc::type, "negative instantiation count");
      for (int i = 1; i <= std::max(inst.count, 0); ++i) {
        std::string prefix =
            inst.count == 1 ? inst.instance : inst.instance + "." + std::to_string(i);
        std::set<std::string> local;
        for (const RelationDecl& d : comp.decls) local.insert(d.name);
        for (const RelationDecl& d : comp.decls) {
          RelationDecl q = d;
          q.name = prefix + "." + d.name;
          if (prog_.relations.count(q.name))
            fail(errc::type, "duplicate declaration of " + q.name);
          prog_.relations.emplace(q.name, q);
        }
        for (const Rule& r : comp.rules) {
          Rule q = r;
          for (Atom& h : q.heads)
            if (local.count(h.predicate)) h.predicate = prefix + "." + h.predicate;
          for (Literal& l : q.body)
            if (l.kind != Literal::Kind::guard && local.count(l.atom.predicate))
              l.atom.predicate = prefix + "." + l.atom.predicate;
          prog_.rules.push_back(std::move(q));
        }
      }
    }
    for (const auto& [name, is_input, at] : io_marks_) {
      auto it = prog_.relations.find(name);
      if (it == prog_.relations.end())
        err_at(at, (is_input ? std::string(".input") : std::string(".output")) +
                       " names undeclared relation " + name);
      if (is_input) it->second.is_input = true;
      else it->second.is_output = true;
    }
  }

  struct IoMark {
    std::string name;
    bool is_input;
    Token at;
  };

  Lexer lex_;
  Program prog_;
  std::vector<RelationDecl> top_decls_;
  std::vector<IoMark> io_marks_;
  ComponentTemplate* cur_comp_ = nullptr;
};

// ---- static validation ----

void collect_binding_vars(const Term& t, std::set<std::string>& out) {
  switch (t.kind) {
    case Term::Kind::variable:
      out.insert(t.text);
      break;
    case Term::Kind::record:
      for (const Term& f : t.args) collect_binding_vars(f, out);
      break;
    default:
      break;  // functor and arithmetic results are compared, not bound
  }
}

void collect_required_vars(const Term& t, std::set<std::string>& out) {
  switch (t.kind) {
    case Term::Kind::variable:
      out.insert(t.text);
      break;
    case Term::Kind::record:
    case Term::Kind::functor:
    case Term::Kind::binary:
      for (const Term& f : t.args) collect_required_vars(f, out);
      break;
    default:
      break;
  }
}

bool contains_functor(const Term& t) {
  if (t.kind == Term::Kind::functor) return true;
  for (const Term& f : t.args)
    if (contains_functor(f)) return true;
  return false;
}

bool is_bindable_pattern(const Term& t) {
  switch (t.kind) {
    case Term::Kind::variable:
    case Term::Kind::wildcard:
    case Term::Kind::number:
    case Term::Kind::symbol:
    case Term::Kind::nil:
      return true;
    case Term::Kind::record:
      for (const Term& f : t.args)
        if (!is_bindable_pattern(f)) return false;
      return true;
    default:
      return false;
  }
}

// Variables that only appear under a functor call or arithmetic node inside a
// positive atom argument are computed, not bound by matching; they must be
// bound somewhere else.
void collect_computed_vars(const Term& t, std::set<std::string>& out) {
  switch (t.kind) {
    case Term::Kind::functor:
    case Term::Kind::binary:
      for (const Term& f : t.args) collect_required_vars(f, out);
      break;
    case Term::Kind::record:
      for (const Term& f : t.args) collect_computed_vars(f, out);
      break;
    default:
      break;
  }
}

void check_rule_safety(const Rule& rule, const std::map<std::string, uint64_t>& consts) {
  auto is_const_name = [&](const std::string& v) { return consts.count(v) > 0; };

  std::set<std::string> bound;
  // Fixpoint over positive atoms and binding equalities.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Literal& l : rule.body) {
      if (l.kind == Literal::Kind::atom) {
        std::set<std::string> vars;
        for (const Term& a : l.atom.args) collect_binding_vars(a, vars);
        for (const auto& v : vars)
          if (!is_const_name(v) && bound.insert(v).second) changed = true;
      } else if (l.kind == Literal::Kind::guard && l.guard.op == CmpOp::eq) {
        auto try_bind = [&](const Term& pat, const Term& src) {
          std::set<std::string> need;
          collect_required_vars(src, need);
          std::set<std::string> have = bound;
          for (const auto& v : need)
            if (!is_const_name(v) && !have.count(v)) return;
          std::set<std::string> vars;
          collect_binding_vars(pat, vars);
          for (const auto& v : vars)
            if (!is_const_name(v) && bound.insert(v).second) changed = true;
        };
        if (is_bindable_pattern(l.guard.lhs)) try_bind(l.guard.lhs, l.guard.rhs);
        if (is_bindable_pattern(l.guard.rhs)) try_bind(l.guard.rhs, l.guard.lhs);
      }
    }
  }

  auto require = [&](const Term& t, const char* what) {
    std::set<std::string> need;
    collect_required_vars(t, need);
    for (const auto& v : need)
      if (!is_const_name(v) && !bound.count(v))
        fail(errc::safety, std::string("unbound variable ") + v + " in " + what + " (rule at line " +
                               std::to_string(rule.line) + ")");
  };

  for (const Literal& l : rule.body) {
    if (l.kind == Literal::Kind::negated) {
      for (const Term& a : l.atom.args) {
        if (contains_functor(a))
          fail(errc::safety, "functor call under negation in rule at line " +
                                 std::to_string(rule.line));
        require(a, "negated literal");
      }
    } else if (l.kind == Literal::Kind::guard) {
      // Binding equalities were handled above; whatever is still unbound in a
      // guard is an error.
      std::set<std::string> need;
      collect_required_vars(l.guard.lhs, need);
      collect_required_vars(l.guard.rhs, need);
      bool ok = true;
      for (const auto& v : need)
        if (!is_const_name(v) && !bound.count(v)) ok = false;
      if (!ok)
        fail(errc::safety,
             "guard with unbound variable in rule at line " + std::to_string(rule.line));
    } else {
      std::set<std::string> computed;
      for (const Term& a : l.atom.args) collect_computed_vars(a, computed);
      for (const auto& v : computed)
        if (!is_const_name(v) && !bound.count(v))
          fail(errc::safety, "variable " + v +
                                 " used in a computed argument is never bound (rule at line " +
                                 std::to_string(rule.line) + ")");
    }
  }
  for (const Atom& h : rule.heads) {
    for (const Term& a : h.args) {
      if (a.kind == Term::Kind::wildcard)
        fail(errc::safety, "wildcard in rule head at line " + std::to_string(rule.line));
      require(a, "rule head");
    }
  }
}

}  // namespace

void validate_program(const Program& prog) {
  for (const Rule& r : prog.rules) {
    if (r.heads.empty()) fail(errc::syntax, "rule without a head");
    for (const Atom& h : r.heads) {
      auto it = prog.relations.find(h.predicate);
      if (it == prog.relations.end())
        fail(errc::unknown_predicate,
             "unknown relation " + h.predicate + " at line " + std::to_string(h.line));
      if (it->second.is_input)
        fail(errc::type, "EDB relation " + h.predicate + " cannot be a rule head (line " +
                             std::to_string(h.line) + ")");
      if (it->second.arity() != h.args.size())
        fail(errc::arity, "relation " + h.predicate + " expects " +
                              std::to_string(it->second.arity()) + " arguments, got " +
                              std::to_string(h.args.size()) + " at line " + std::to_string(h.line));
    }
    for (const Literal& l : r.body) {
      if (l.kind == Literal::Kind::guard) continue;
      const Atom& a = l.atom;
      auto it = prog.relations.find(a.predicate);
      if (it == prog.relations.end())
        fail(errc::unknown_predicate,
             "unknown relation " + a.predicate + " at line " + std::to_string(a.line));
      if (it->second.arity() != a.args.size())
        fail(errc::arity, "relation " + a.predicate + " expects " +
                              std::to_string(it->second.arity()) + " arguments, got " +
                              std::to_string(a.args.size()) + " at line " + std::to_string(a.line));
    }
    check_rule_safety(r, prog.consts);
  }
}

Program parse_program(std::string_view source) { return Parser(source).run(); }

}  // namespace symdl
