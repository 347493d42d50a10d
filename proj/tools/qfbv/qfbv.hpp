#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qfbv {

// --- s-expressions ---------------------------------------------------------

struct Sexpr {
    bool atom = false;
    std::string text;          // atom spelling
    std::vector<Sexpr> items;  // list elements
};

// Scans one balanced s-expression starting at pos; returns std::nullopt when
// the buffer holds no complete expression yet. On success pos is advanced
// past the consumed text.
std::optional<Sexpr> parse_sexpr(const std::string& buf, size_t& pos, std::string& error);

// --- terms -----------------------------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<Term>;

struct Term {
    enum class Kind { constant, variable, app };
    Kind kind = Kind::app;
    std::string name;        // variable name or operator symbol
    std::vector<bool> bits;  // constant payload, least significant first
    int width = 0;           // bit width; 0 means boolean
    std::vector<TermPtr> args;
};

// --- session ---------------------------------------------------------------

struct Session {
    std::map<std::string, int> decls;
    std::vector<TermPtr> asserts;
    std::map<std::string, std::vector<bool>> model;
    bool have_model = false;
};

// Executes one command, returning the text to print ("" for silent commands).
// Sets quit when the command was (exit).
std::string handle_command(Session& s, const Sexpr& cmd, bool& quit);

// --- solving ---------------------------------------------------------------

// Returns "sat", "unsat" or an (error ...) line; fills model on sat with one
// entry per declared constant.
std::string solve(const std::map<std::string, int>& decls,
                  const std::vector<TermPtr>& asserts,
                  std::map<std::string, std::vector<bool>>& model);

// --- CNF / SAT -------------------------------------------------------------

// Literals use the DIMACS convention: +v asserts variable v, -v its negation.
struct Cnf {
    int nvars = 0;
    std::vector<std::vector<int>> clauses;
    int new_var() { return ++nvars; }
    void add(std::vector<int> clause) { clauses.push_back(std::move(clause)); }
};

// Complete CDCL search. On sat, assigns[v] is 0 or 1 for every variable.
bool cdcl_solve(const Cnf& cnf, std::vector<int8_t>& assigns);

}  // namespace qfbv
