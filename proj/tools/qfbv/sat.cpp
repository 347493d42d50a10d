#include "qfbv.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

namespace qfbv {

namespace {

// Internal literal encoding: lit = 2*(var-1) + (negated ? 1 : 0).
inline int to_lit(int dimacs) { return 2 * (std::abs(dimacs) - 1) + (dimacs < 0 ? 1 : 0); }
inline int lit_var(int lit) { return lit >> 1; }
inline int lit_neg(int lit) { return lit ^ 1; }

struct Solver {
    int nvars;
    std::vector<std::vector<int>> clauses;
    std::vector<std::vector<std::pair<int, int>>> watches;  // lit -> (clause, blocker)
    std::vector<int8_t> value;   // by var: -1 unset, 0 false, 1 true
    std::vector<int8_t> phase;   // saved polarity
    std::vector<int> level;      // by var
    std::vector<int> reason;     // by var, clause index or -1
    std::vector<int> trail;
    std::vector<int> trail_lim;
    size_t qhead = 0;
    std::vector<double> activity;
    double var_inc = 1.0;
    std::priority_queue<std::pair<double, int>> order;
    std::vector<int8_t> seen;

    explicit Solver(int n)
        : nvars(n),
          watches(2 * n),
          value(n, -1),
          phase(n, 0),
          level(n, 0),
          reason(n, -1),
          activity(n, 0.0),
          seen(n, 0) {
        for (int v = 0; v < n; v++) order.push({0.0, v});
    }

    int decision_level() const { return static_cast<int>(trail_lim.size()); }

    bool lit_true(int lit) const {
        int8_t v = value[lit_var(lit)];
        return v >= 0 && v == ((lit & 1) ? 0 : 1);
    }
    bool lit_false(int lit) const {
        int8_t v = value[lit_var(lit)];
        return v >= 0 && v == ((lit & 1) ? 1 : 0);
    }
    bool lit_unset(int lit) const { return value[lit_var(lit)] < 0; }

    void enqueue(int lit, int from) {
        int v = lit_var(lit);
        value[v] = (lit & 1) ? 0 : 1;
        level[v] = decision_level();
        reason[v] = from;
        trail.push_back(lit);
    }

    void bump(int v) {
        activity[v] += var_inc;
        if (activity[v] > 1e100) {
            for (double& a : activity) a *= 1e-100;
            var_inc *= 1e-100;
        }
        order.push({activity[v], v});
    }

    void attach(int idx) {
        const std::vector<int>& c = clauses[idx];
        watches[lit_neg(c[0])].push_back({idx, c[1]});
        watches[lit_neg(c[1])].push_back({idx, c[0]});
    }

    // Returns conflicting clause index or -1.
    int propagate() {
        while (qhead < trail.size()) {
            int lit = trail[qhead++];
            std::vector<std::pair<int, int>>& ws = watches[lit];
            size_t keep = 0;
            for (size_t i = 0; i < ws.size(); i++) {
                auto [idx, blocker] = ws[i];
                if (lit_true(blocker)) {
                    ws[keep++] = ws[i];
                    continue;
                }
                std::vector<int>& c = clauses[idx];
                int falsified = lit_neg(lit);
                if (c[0] == falsified) std::swap(c[0], c[1]);
                if (lit_true(c[0])) {
                    ws[keep++] = {idx, c[0]};
                    continue;
                }
                bool moved = false;
                for (size_t k = 2; k < c.size(); k++) {
                    if (!lit_false(c[k])) {
                        std::swap(c[1], c[k]);
                        watches[lit_neg(c[1])].push_back({idx, c[0]});
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[keep++] = ws[i];
                if (lit_false(c[0])) {
                    while (++i < ws.size()) ws[keep++] = ws[i];
                    ws.resize(keep);
                    qhead = trail.size();
                    return idx;
                }
                enqueue(c[0], idx);
            }
            ws.resize(keep);
        }
        return -1;
    }

    void analyze(int confl, std::vector<int>& learnt, int& back_level) {
        learnt.clear();
        learnt.push_back(0);  // slot for the asserting literal
        int counter = 0;
        int lit = -1;
        size_t index = trail.size();
        while (true) {
            const std::vector<int>& c = clauses[confl];
            for (size_t k = (lit == -1 ? 0 : 1); k < c.size(); k++) {
                int q = (lit == -1) ? c[k] : (c[k] == lit_neg(lit) ? -1 : c[k]);
                if (q < 0) continue;
                int v = lit_var(q);
                if (seen[v] || level[v] == 0) continue;
                seen[v] = 1;
                bump(v);
                if (level[v] >= decision_level()) {
                    counter++;
                } else {
                    learnt.push_back(q);
                }
            }
            while (!seen[lit_var(trail[index - 1])]) index--;
            index--;
            lit = trail[index];
            seen[lit_var(lit)] = 0;
            counter--;
            if (counter == 0) break;
            confl = reason[lit_var(lit)];
        }
        learnt[0] = lit_neg(lit);
        back_level = 0;
        if (learnt.size() > 1) {
            size_t max_i = 1;
            for (size_t i = 2; i < learnt.size(); i++) {
                if (level[lit_var(learnt[i])] > level[lit_var(learnt[max_i])]) max_i = i;
            }
            std::swap(learnt[1], learnt[max_i]);
            back_level = level[lit_var(learnt[1])];
        }
        for (int l : learnt) seen[lit_var(l)] = 0;
    }

    void backtrack(int target) {
        while (decision_level() > target) {
            size_t bound = trail_lim.back();
            trail_lim.pop_back();
            while (trail.size() > bound) {
                int lit = trail.back();
                trail.pop_back();
                int v = lit_var(lit);
                phase[v] = value[v];
                value[v] = -1;
                order.push({activity[v], v});
            }
        }
        qhead = trail.size();
    }

    int pick_branch() {
        while (!order.empty()) {
            auto [act, v] = order.top();
            order.pop();
            if (value[v] >= 0) continue;
            if (act != activity[v]) continue;  // stale entry
            return v;
        }
        for (int v = 0; v < nvars; v++)
            if (value[v] < 0) return v;
        return -1;
    }

    bool solve() {
        if (propagate() != -1) return false;
        int64_t conflicts_until_restart = 100;
        int64_t luby_step = 1;
        int64_t conflicts = 0;
        std::vector<int> learnt;
        while (true) {
            int confl = propagate();
            if (confl != -1) {
                conflicts++;
                if (decision_level() == 0) return false;
                int back_level;
                analyze(confl, learnt, back_level);
                backtrack(back_level);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], -1);
                } else {
                    clauses.push_back(learnt);
                    attach(static_cast<int>(clauses.size()) - 1);
                    enqueue(learnt[0], static_cast<int>(clauses.size()) - 1);
                }
                var_inc /= 0.95;
                continue;
            }
            if (conflicts >= conflicts_until_restart && decision_level() > 0) {
                conflicts = 0;
                luby_step++;
                int64_t luby = luby_step & -luby_step;  // Luby sequence 1,2,1,4,...
                conflicts_until_restart = 100 * luby;
                backtrack(0);
                continue;
            }
            int v = pick_branch();
            if (v < 0) return true;
            trail_lim.push_back(static_cast<int>(trail.size()));
            enqueue(2 * v + (phase[v] == 1 ? 0 : 1), -1);
        }
    }
};

}  // namespace

bool cdcl_solve(const Cnf& cnf, std::vector<int8_t>& assigns) {
    Solver s(cnf.nvars);
    for (const std::vector<int>& raw : cnf.clauses) {
        std::vector<int> c;
        c.reserve(raw.size());
        bool tautology = false;
        for (int d : raw) {
            int lit = to_lit(d);
            if (std::find(c.begin(), c.end(), lit) != c.end()) continue;
            if (std::find(c.begin(), c.end(), lit_neg(lit)) != c.end()) {
                tautology = true;
                break;
            }
            c.push_back(lit);
        }
        if (tautology) continue;
        if (c.empty()) return false;
        if (c.size() == 1) {
            if (s.lit_false(c[0])) return false;
            if (s.lit_unset(c[0])) s.enqueue(c[0], -1);
            continue;
        }
        s.clauses.push_back(std::move(c));
        s.attach(static_cast<int>(s.clauses.size()) - 1);
    }
    if (!s.solve()) return false;
    assigns.assign(cnf.nvars + 1, 0);
    for (int v = 0; v < cnf.nvars; v++) assigns[v + 1] = s.value[v] == 1 ? 1 : 0;
    return true;
}

}  // namespace qfbv
