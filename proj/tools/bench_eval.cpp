#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "symdl/eval.hpp"
#include "symdl/factdb.hpp"
#include "symdl/parser.hpp"
#include "symdl/value.hpp"

// Times the naive reference evaluator against the semi-naive engine, serial
// and parallel, on a random transitive-closure instance.

namespace {

const char* kProgram = R"(
.decl edge(a: symbol, b: symbol)
.decl path(a: symbol, b: symbol)
.input edge
.output path
path(x, y) :- edge(x, y).
path(x, z) :- path(x, y), edge(y, z).
)";

double time_one(const std::function<symdl::FactDB()>& f, uint64_t& out_size) {
    auto start = std::chrono::steady_clock::now();
    symdl::FactDB db = f();
    auto stop = std::chrono::steady_clock::now();
    const symdl::Relation* path = db.find("path");
    out_size = path ? path->size() : 0;
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluator benchmark: naive vs semi-naive vs parallel"};
    uint64_t nodes = 300;
    uint64_t edges = 900;
    uint64_t seed = 1;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    app.add_option("--nodes", nodes, "graph node count");
    app.add_option("--edges", edges, "graph edge count");
    app.add_option("--seed", seed, "graph RNG seed");
    app.add_option("--jobs", jobs, "worker count for the parallel run");
    CLI11_PARSE(app, argc, argv);
    if (jobs < 1) jobs = 1;

    symdl::Engine engine;
    symdl::Program program = symdl::parse_program(kProgram);

    symdl::FactDB edb;
    symdl::Relation& edge = edb.get("edge", 2);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<uint64_t> pick(0, nodes - 1);
    for (uint64_t i = 0; i < edges; i++) {
        std::string a = "n" + std::to_string(pick(rng));
        std::string b = "n" + std::to_string(pick(rng));
        edge.insert({engine.sym(a), engine.sym(b)});
    }

    uint64_t sz_naive = 0, sz_serial = 0, sz_parallel = 0;
    double t_naive = time_one(
        [&] { return symdl::naive_evaluate(engine, program, edb); }, sz_naive);
    symdl::EvalOptions serial;
    serial.workers = 1;
    double t_serial = time_one(
        [&] { return symdl::evaluate(engine, program, edb, serial); }, sz_serial);
    symdl::EvalOptions parallel;
    parallel.workers = jobs;
    double t_parallel = time_one(
        [&] { return symdl::evaluate(engine, program, edb, parallel); }, sz_parallel);

    std::printf("graph: %llu nodes, %llu edges, seed %llu\n",
                (unsigned long long)nodes, (unsigned long long)edges, (unsigned long long)seed);
    std::printf("%-22s %10s %12s\n", "evaluator", "seconds", "path tuples");
    std::printf("%-22s %10.3f %12llu\n", "naive reference", t_naive,
                (unsigned long long)sz_naive);
    std::printf("%-22s %10.3f %12llu\n", "semi-naive (1 worker)", t_serial,
                (unsigned long long)sz_serial);
    std::string label = "semi-naive (" + std::to_string(jobs) + " workers)";
    std::printf("%-22s %10.3f %12llu\n", label.c_str(), t_parallel,
                (unsigned long long)sz_parallel);
    if (sz_naive != sz_serial || sz_serial != sz_parallel) {
        std::printf("MISMATCH in tuple counts\n");
        return 1;
    }
    return 0;
}
