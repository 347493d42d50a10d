#include "qfbv.hpp"

#include <stdexcept>

namespace qfbv {

namespace {

// Tseitin encoder. Literal 1 is pinned true so constants fold away instead of
// growing the clause set.
struct Blaster {
    Cnf& cnf;
    int lit_true;
    std::map<const Term*, std::vector<int>> bv_cache;
    std::map<const Term*, int> bool_cache;
    std::map<std::string, std::vector<int>> var_bits;

    explicit Blaster(Cnf& c) : cnf(c) {
        lit_true = cnf.new_var();
        cnf.add({lit_true});
    }

    int mk_and(int a, int b) {
        if (a == lit_true) return b;
        if (b == lit_true) return a;
        if (a == -lit_true || b == -lit_true) return -lit_true;
        if (a == b) return a;
        if (a == -b) return -lit_true;
        int v = cnf.new_var();
        cnf.add({-v, a});
        cnf.add({-v, b});
        cnf.add({v, -a, -b});
        return v;
    }

    int mk_or(int a, int b) { return -mk_and(-a, -b); }

    int mk_xor(int a, int b) {
        if (a == lit_true) return -b;
        if (a == -lit_true) return b;
        if (b == lit_true) return -a;
        if (b == -lit_true) return a;
        if (a == b) return -lit_true;
        if (a == -b) return lit_true;
        int v = cnf.new_var();
        cnf.add({-v, a, b});
        cnf.add({-v, -a, -b});
        cnf.add({v, a, -b});
        cnf.add({v, -a, b});
        return v;
    }

    int mk_mux(int c, int t, int e) {
        if (c == lit_true) return t;
        if (c == -lit_true) return e;
        if (t == e) return t;
        int v = cnf.new_var();
        cnf.add({-v, -c, t});
        cnf.add({-v, c, e});
        cnf.add({v, -c, -t});
        cnf.add({v, c, -e});
        return v;
    }

    // sum and carry of a one-bit add.
    void full_adder(int a, int b, int cin, int& sum, int& cout) {
        int axb = mk_xor(a, b);
        sum = mk_xor(axb, cin);
        cout = mk_or(mk_and(a, b), mk_and(cin, axb));
    }

    std::vector<int> const_bits(const std::vector<bool>& bits) {
        std::vector<int> out;
        out.reserve(bits.size());
        for (bool b : bits) out.push_back(b ? lit_true : -lit_true);
        return out;
    }

    std::vector<int> zeros(size_t n) { return std::vector<int>(n, -lit_true); }

    std::vector<int> not_vec(const std::vector<int>& a) {
        std::vector<int> out;
        out.reserve(a.size());
        for (int l : a) out.push_back(-l);
        return out;
    }

    std::vector<int> add_vec(const std::vector<int>& a, const std::vector<int>& b, int cin) {
        std::vector<int> out(a.size());
        int c = cin;
        for (size_t i = 0; i < a.size(); i++) {
            int s;
            full_adder(a[i], b[i], c, s, c);
            out[i] = s;
        }
        return out;
    }

    std::vector<int> sub_vec(const std::vector<int>& a, const std::vector<int>& b) {
        return add_vec(a, not_vec(b), lit_true);
    }

    // Carry-out of a + ~b + 1 is the not-borrow of a - b.
    int ult(const std::vector<int>& a, const std::vector<int>& b) {
        int c = lit_true;
        for (size_t i = 0; i < a.size(); i++) {
            int nb = -b[i];
            int axb = mk_xor(a[i], nb);
            c = mk_or(mk_and(a[i], nb), mk_and(c, axb));
        }
        return -c;
    }

    int eq_vec(const std::vector<int>& a, const std::vector<int>& b) {
        int acc = lit_true;
        for (size_t i = 0; i < a.size(); i++) acc = mk_and(acc, -mk_xor(a[i], b[i]));
        return acc;
    }

    std::vector<int> mul_vec(const std::vector<int>& a, const std::vector<int>& b) {
        size_t w = a.size();
        std::vector<int> acc = zeros(w);
        for (size_t i = 0; i < w; i++) {
            std::vector<int> addend(w, -lit_true);
            for (size_t j = i; j < w; j++) addend[j] = mk_and(b[i], a[j - i]);
            acc = add_vec(acc, addend, -lit_true);
        }
        return acc;
    }

    std::vector<int> shift_vec(const std::vector<int>& a, const std::vector<int>& s, bool left) {
        size_t w = a.size();
        size_t stages = 0;
        while ((size_t{1} << stages) < w) stages++;
        std::vector<int> cur = a;
        for (size_t k = 0; k < stages && k < s.size(); k++) {
            size_t amount = size_t{1} << k;
            std::vector<int> shifted(w);
            for (size_t j = 0; j < w; j++) {
                size_t src;
                bool in_range;
                if (left) {
                    in_range = j >= amount;
                    src = j - amount;
                } else {
                    in_range = j + amount < w;
                    src = j + amount;
                }
                shifted[j] = in_range ? cur[src] : -lit_true;
            }
            for (size_t j = 0; j < w; j++) cur[j] = mk_mux(s[k], shifted[j], cur[j]);
        }
        int big = -lit_true;
        for (size_t k = stages; k < s.size(); k++) big = mk_or(big, s[k]);
        for (size_t j = 0; j < w; j++) cur[j] = mk_and(cur[j], -big);
        return cur;
    }

    // Restoring division. The remainder carries one guard bit; a zero divisor
    // bypasses the loop entirely via the final mux (all-ones quotient,
    // pass-through remainder).
    void divmod(const std::vector<int>& a, const std::vector<int>& d, std::vector<int>& q,
                std::vector<int>& r) {
        size_t w = a.size();
        std::vector<int> dx = d;
        dx.push_back(-lit_true);
        std::vector<int> rem = zeros(w + 1);
        q.assign(w, -lit_true);
        for (size_t step = w; step > 0; step--) {
            size_t i = step - 1;
            std::vector<int> shifted(w + 1);
            shifted[0] = a[i];
            for (size_t j = 1; j <= w; j++) shifted[j] = rem[j - 1];
            int ge = -ult(shifted, dx);
            std::vector<int> sub = sub_vec(shifted, dx);
            for (size_t j = 0; j <= w; j++) rem[j] = mk_mux(ge, sub[j], shifted[j]);
            q[i] = ge;
        }
        int dz = lit_true;
        for (size_t j = 0; j < w; j++) dz = mk_and(dz, -d[j]);
        for (size_t j = 0; j < w; j++) {
            q[j] = mk_mux(dz, lit_true, q[j]);
            r[j] = mk_mux(dz, a[j], rem[j]);
        }
    }

    const std::vector<int>& var(const std::string& name, int width) {
        auto it = var_bits.find(name);
        if (it != var_bits.end()) return it->second;
        std::vector<int> bits(width);
        for (int i = 0; i < width; i++) bits[i] = cnf.new_var();
        return var_bits.emplace(name, std::move(bits)).first->second;
    }

    std::vector<int> blast_bv(const TermPtr& t) {
        auto cached = bv_cache.find(t.get());
        if (cached != bv_cache.end()) return cached->second;
        std::vector<int> out;
        switch (t->kind) {
            case Term::Kind::constant:
                out = const_bits(t->bits);
                break;
            case Term::Kind::variable:
                out = var(t->name, t->width);
                break;
            case Term::Kind::app: {
                const std::string& op = t->name;
                if (op == "ite") {
                    int c = blast_bool(t->args[0]);
                    std::vector<int> x = blast_bv(t->args[1]);
                    std::vector<int> y = blast_bv(t->args[2]);
                    out.resize(x.size());
                    for (size_t i = 0; i < x.size(); i++) out[i] = mk_mux(c, x[i], y[i]);
                    break;
                }
                if (op == "bvnot") {
                    out = not_vec(blast_bv(t->args[0]));
                    break;
                }
                if (op == "bvneg") {
                    std::vector<int> a = blast_bv(t->args[0]);
                    out = add_vec(not_vec(a), zeros(a.size()), lit_true);
                    break;
                }
                std::vector<int> a = blast_bv(t->args[0]);
                std::vector<int> b = blast_bv(t->args[1]);
                if (op == "bvadd") {
                    out = add_vec(a, b, -lit_true);
                } else if (op == "bvsub") {
                    out = sub_vec(a, b);
                } else if (op == "bvmul") {
                    out = mul_vec(a, b);
                } else if (op == "bvand") {
                    out.resize(a.size());
                    for (size_t i = 0; i < a.size(); i++) out[i] = mk_and(a[i], b[i]);
                } else if (op == "bvor") {
                    out.resize(a.size());
                    for (size_t i = 0; i < a.size(); i++) out[i] = mk_or(a[i], b[i]);
                } else if (op == "bvxor") {
                    out.resize(a.size());
                    for (size_t i = 0; i < a.size(); i++) out[i] = mk_xor(a[i], b[i]);
                } else if (op == "bvshl") {
                    out = shift_vec(a, b, true);
                } else if (op == "bvlshr") {
                    out = shift_vec(a, b, false);
                } else if (op == "bvudiv" || op == "bvurem") {
                    std::vector<int> q(a.size()), r(a.size());
                    divmod(a, b, q, r);
                    out = (op == "bvudiv") ? q : r;
                } else {
                    throw std::runtime_error("cannot bitblast operator " + op);
                }
                break;
            }
        }
        bv_cache.emplace(t.get(), out);
        return out;
    }

    int blast_bool(const TermPtr& t) {
        auto cached = bool_cache.find(t.get());
        if (cached != bool_cache.end()) return cached->second;
        int out;
        if (t->kind == Term::Kind::constant) {
            out = t->bits.at(0) ? lit_true : -lit_true;
        } else if (t->kind == Term::Kind::variable) {
            throw std::runtime_error("boolean constants are not supported");
        } else {
            const std::string& op = t->name;
            if (op == "=" || op == "distinct") {
                int eq;
                if (t->args[0]->width == 0) {
                    eq = -mk_xor(blast_bool(t->args[0]), blast_bool(t->args[1]));
                } else {
                    eq = eq_vec(blast_bv(t->args[0]), blast_bv(t->args[1]));
                }
                out = (op == "=") ? eq : -eq;
            } else if (op == "bvult") {
                out = ult(blast_bv(t->args[0]), blast_bv(t->args[1]));
            } else if (op == "bvugt") {
                out = ult(blast_bv(t->args[1]), blast_bv(t->args[0]));
            } else if (op == "bvule") {
                out = -ult(blast_bv(t->args[1]), blast_bv(t->args[0]));
            } else if (op == "bvuge") {
                out = -ult(blast_bv(t->args[0]), blast_bv(t->args[1]));
            } else if (op == "bvslt") {
                std::vector<int> a = blast_bv(t->args[0]);
                std::vector<int> b = blast_bv(t->args[1]);
                int am = a.back();
                int bm = b.back();
                int same_sign = -mk_xor(am, bm);
                out = mk_or(mk_and(am, -bm), mk_and(same_sign, ult(a, b)));
            } else if (op == "and") {
                out = lit_true;
                for (const auto& arg : t->args) out = mk_and(out, blast_bool(arg));
            } else if (op == "or") {
                out = -lit_true;
                for (const auto& arg : t->args) out = mk_or(out, blast_bool(arg));
            } else if (op == "not") {
                out = -blast_bool(t->args[0]);
            } else if (op == "=>") {
                out = mk_or(-blast_bool(t->args[0]), blast_bool(t->args[1]));
            } else if (op == "ite") {
                out = mk_mux(blast_bool(t->args[0]), blast_bool(t->args[1]),
                             blast_bool(t->args[2]));
            } else {
                throw std::runtime_error("cannot bitblast boolean operator " + op);
            }
        }
        bool_cache.emplace(t.get(), out);
        return out;
    }
};

}  // namespace

std::string solve(const std::map<std::string, int>& decls, const std::vector<TermPtr>& asserts,
                  std::map<std::string, std::vector<bool>>& model) {
    try {
        Cnf cnf;
        Blaster bl(cnf);
        for (const auto& [name, width] : decls) bl.var(name, width);
        for (const TermPtr& t : asserts) cnf.add({bl.blast_bool(t)});
        std::vector<int8_t> assigns;
        if (!cdcl_solve(cnf, assigns)) return "unsat";
        for (const auto& [name, width] : decls) {
            const std::vector<int>& bits = bl.var_bits.at(name);
            std::vector<bool> value(width, false);
            for (int i = 0; i < width; i++) {
                int v = bits[i];
                value[i] = v > 0 ? assigns[v] == 1 : assigns[-v] == 0;
            }
            model[name] = std::move(value);
        }
        return "sat";
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '"') c = '\'';
        return "(error \"" + msg + "\")";
    }
}

}  // namespace qfbv
