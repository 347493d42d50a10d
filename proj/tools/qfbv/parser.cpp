#include "qfbv.hpp"

#include <cctype>
#include <stdexcept>

namespace qfbv {

namespace {

size_t skip_ws(const std::string& buf, size_t pos) {
    while (pos < buf.size()) {
        char c = buf[pos];
        if (c == ';') {
            while (pos < buf.size() && buf[pos] != '\n') pos++;
            continue;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) break;
        pos++;
    }
    return pos;
}

bool parse_one(const std::string& buf, size_t& pos, Sexpr& out, bool& incomplete,
               std::string& error) {
    pos = skip_ws(buf, pos);
    if (pos >= buf.size()) {
        incomplete = true;
        return false;
    }
    char c = buf[pos];
    if (c == ')') {
        error = "unexpected ')'";
        return false;
    }
    if (c == '(') {
        pos++;
        Sexpr list;
        while (true) {
            pos = skip_ws(buf, pos);
            if (pos >= buf.size()) {
                incomplete = true;
                return false;
            }
            if (buf[pos] == ')') {
                pos++;
                out = std::move(list);
                return true;
            }
            Sexpr child;
            if (!parse_one(buf, pos, child, incomplete, error)) return false;
            list.items.push_back(std::move(child));
        }
    }
    if (c == '"') {
        size_t end = pos + 1;
        while (end < buf.size() && buf[end] != '"') end++;
        if (end >= buf.size()) {
            incomplete = true;
            return false;
        }
        out.atom = true;
        out.text = buf.substr(pos, end - pos + 1);
        pos = end + 1;
        return true;
    }
    size_t end = pos;
    while (end < buf.size()) {
        char d = buf[end];
        if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
        end++;
    }
    out.atom = true;
    out.text = buf.substr(pos, end - pos);
    pos = end;
    return true;
}

}  // namespace

std::optional<Sexpr> parse_sexpr(const std::string& buf, size_t& pos, std::string& error) {
    error.clear();
    Sexpr out;
    bool incomplete = false;
    size_t cursor = pos;
    if (!parse_one(buf, cursor, out, incomplete, error)) {
        if (incomplete) error.clear();
        return std::nullopt;
    }
    pos = cursor;
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

TermPtr make_const(std::vector<bool> bits, int width) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::constant;
    t->bits = std::move(bits);
    t->width = width;
    return t;
}

TermPtr make_bool_const(bool v) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::constant;
    t->bits = {v};
    t->width = 0;
    return t;
}

TermPtr parse_literal_atom(const std::string& text) {
    if (text.size() > 2 && text[0] == '#' && text[1] == 'x') {
        std::vector<bool> bits;
        for (size_t i = text.size(); i > 2; i--) {
            int d = hex_digit(text[i - 1]);
            if (d < 0) fail("bad hex literal " + text);
            for (int b = 0; b < 4; b++) bits.push_back(((d >> b) & 1) != 0);
        }
        return make_const(std::move(bits), static_cast<int>(bits.size()));
    }
    if (text.size() > 2 && text[0] == '#' && text[1] == 'b') {
        std::vector<bool> bits;
        for (size_t i = text.size(); i > 2; i--) {
            char c = text[i - 1];
            if (c != '0' && c != '1') fail("bad binary literal " + text);
            bits.push_back(c == '1');
        }
        return make_const(std::move(bits), static_cast<int>(bits.size()));
    }
    return nullptr;
}

struct TermBuilder {
    const std::map<std::string, int>& decls;
    std::vector<std::map<std::string, TermPtr>> lets;

    TermPtr lookup(const std::string& name) {
        for (auto it = lets.rbegin(); it != lets.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) return found->second;
        }
        auto d = decls.find(name);
        if (d == decls.end()) return nullptr;
        auto t = std::make_shared<Term>();
        t->kind = Term::Kind::variable;
        t->name = name;
        t->width = d->second;
        return t;
    }

    TermPtr build(const Sexpr& e) {
        if (e.atom) {
            if (e.text == "true") return make_bool_const(true);
            if (e.text == "false") return make_bool_const(false);
            if (auto lit = parse_literal_atom(e.text)) return lit;
            if (auto v = lookup(e.text)) return v;
            fail("unknown symbol " + e.text);
        }
        if (e.items.empty()) fail("empty application");
        const Sexpr& head = e.items[0];
        if (!head.atom) {
            // (_ bvN W) style indexed literal.
            fail("unsupported application head");
        }
        if (head.text == "_") {
            if (e.items.size() == 3 && e.items[1].atom && e.items[2].atom &&
                e.items[1].text.rfind("bv", 0) == 0) {
                unsigned long long v = std::stoull(e.items[1].text.substr(2));
                int width = std::stoi(e.items[2].text);
                std::vector<bool> bits;
                for (int b = 0; b < width; b++) bits.push_back(((v >> b) & 1ULL) != 0);
                return make_const(std::move(bits), width);
            }
            fail("unsupported indexed term");
        }
        if (head.text == "let") {
            if (e.items.size() != 3 || e.items[1].atom) fail("malformed let");
            std::map<std::string, TermPtr> frame;
            for (const Sexpr& binding : e.items[1].items) {
                if (binding.atom || binding.items.size() != 2 || !binding.items[0].atom)
                    fail("malformed let binding");
                frame[binding.items[0].text] = build(binding.items[1]);
            }
            lets.push_back(std::move(frame));
            TermPtr body = build(e.items[2]);
            lets.pop_back();
            return body;
        }
        std::vector<TermPtr> args;
        for (size_t i = 1; i < e.items.size(); i++) args.push_back(build(e.items[i]));
        return apply(head.text, std::move(args));
    }

    static bool all_bool(const std::vector<TermPtr>& args) {
        for (const auto& a : args)
            if (a->width != 0) return false;
        return true;
    }

    TermPtr apply(const std::string& op, std::vector<TermPtr> args) {
        auto t = std::make_shared<Term>();
        t->kind = Term::Kind::app;
        t->name = op;
        auto need = [&](size_t n) {
            if (args.size() != n) fail(op + " expects " + std::to_string(n) + " arguments");
        };
        auto same_width = [&]() {
            for (size_t i = 1; i < args.size(); i++)
                if (args[i]->width != args[0]->width) fail("width mismatch in " + op);
        };
        if (op == "bvadd" || op == "bvsub" || op == "bvmul" || op == "bvudiv" ||
            op == "bvurem" || op == "bvshl" || op == "bvlshr" || op == "bvand" ||
            op == "bvor" || op == "bvxor") {
            need(2);
            if (args[0]->width == 0) fail(op + " needs bitvector arguments");
            same_width();
            t->width = args[0]->width;
        } else if (op == "bvnot" || op == "bvneg") {
            need(1);
            if (args[0]->width == 0) fail(op + " needs a bitvector argument");
            t->width = args[0]->width;
        } else if (op == "ite") {
            need(3);
            if (args[0]->width != 0) fail("ite condition must be boolean");
            if (args[1]->width != args[2]->width) fail("width mismatch in ite");
            t->width = args[1]->width;
        } else if (op == "=" || op == "distinct") {
            need(2);
            if (args[0]->width != args[1]->width) fail("width mismatch in " + op);
            t->width = 0;
        } else if (op == "bvult" || op == "bvule" || op == "bvugt" || op == "bvuge" ||
                   op == "bvslt") {
            need(2);
            if (args[0]->width == 0) fail(op + " needs bitvector arguments");
            same_width();
            t->width = 0;
        } else if (op == "and" || op == "or") {
            if (args.empty()) fail(op + " expects arguments");
            if (!all_bool(args)) fail(op + " needs boolean arguments");
            t->width = 0;
        } else if (op == "not") {
            need(1);
            if (!all_bool(args)) fail("not needs a boolean argument");
            t->width = 0;
        } else if (op == "=>") {
            need(2);
            if (!all_bool(args)) fail("=> needs boolean arguments");
            t->width = 0;
        } else {
            fail("unsupported operator " + op);
        }
        t->args = std::move(args);
        return t;
    }
};

std::string render_value(const std::string& name, const std::vector<bool>& bits) {
    std::string out = "(" + name + " ";
    if (bits.size() % 4 == 0) {
        out += "#x";
        for (size_t i = bits.size(); i > 0; i -= 4) {
            int d = 0;
            for (int b = 0; b < 4; b++)
                if (bits[i - 4 + b]) d |= 1 << b;
            out += "0123456789abcdef"[d];
        }
    } else {
        out += "#b";
        for (size_t i = bits.size(); i > 0; i--) out += bits[i - 1] ? '1' : '0';
    }
    out += ")";
    return out;
}

int parse_sort_width(const Sexpr& sort) {
    if (!sort.atom && sort.items.size() == 3 && sort.items[0].atom &&
        sort.items[0].text == "_" && sort.items[1].atom && sort.items[1].text == "BitVec" &&
        sort.items[2].atom) {
        int w = std::stoi(sort.items[2].text);
        if (w <= 0 || w > 1 << 16) fail("unsupported bitvector width");
        return w;
    }
    fail("unsupported sort");
}

}  // namespace

std::string handle_command(Session& s, const Sexpr& cmd, bool& quit) {
    quit = false;
    try {
        if (cmd.atom || cmd.items.empty() || !cmd.items[0].atom) fail("malformed command");
        const std::string& verb = cmd.items[0].text;
        if (verb == "exit") {
            quit = true;
            return "";
        }
        if (verb == "reset") {
            s = Session{};
            return "";
        }
        if (verb == "set-option" || verb == "set-logic" || verb == "set-info") return "";
        if (verb == "declare-const") {
            if (cmd.items.size() != 3 || !cmd.items[1].atom) fail("malformed declare-const");
            s.decls[cmd.items[1].text] = parse_sort_width(cmd.items[2]);
            return "";
        }
        if (verb == "declare-fun") {
            if (cmd.items.size() != 4 || !cmd.items[1].atom || cmd.items[2].atom ||
                !cmd.items[2].items.empty())
                fail("only zero-arity declare-fun is supported");
            s.decls[cmd.items[1].text] = parse_sort_width(cmd.items[3]);
            return "";
        }
        if (verb == "assert") {
            if (cmd.items.size() != 2) fail("malformed assert");
            TermBuilder builder{s.decls, {}};
            TermPtr t = builder.build(cmd.items[1]);
            if (t->width != 0) fail("assert needs a boolean term");
            s.asserts.push_back(std::move(t));
            return "";
        }
        if (verb == "check-sat") {
            s.model.clear();
            s.have_model = false;
            std::string verdict = solve(s.decls, s.asserts, s.model);
            s.have_model = (verdict == "sat");
            return verdict;
        }
        if (verb == "get-value") {
            if (!s.have_model) fail("no model available");
            if (cmd.items.size() != 2 || cmd.items[1].atom) fail("malformed get-value");
            std::string out = "(";
            bool first = true;
            for (const Sexpr& item : cmd.items[1].items) {
                if (!item.atom) fail("get-value supports plain symbols only");
                auto found = s.model.find(item.text);
                if (found == s.model.end()) fail("unknown constant " + item.text);
                if (!first) out += " ";
                first = false;
                out += render_value(item.text, found->second);
            }
            out += ")";
            return out;
        }
        fail("unsupported command " + verb);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '"') c = '\'';
        return "(error \"" + msg + "\")";
    }
}

}  // namespace qfbv
