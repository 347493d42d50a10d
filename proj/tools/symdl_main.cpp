#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "symdl/analyses.hpp"
#include "symdl/dispatch.hpp"
#include "symdl/error.hpp"
#include "symdl/eval.hpp"
#include "symdl/factdb.hpp"
#include "symdl/parser.hpp"
#include "symdl/smt.hpp"
#include "symdl/value.hpp"

#ifndef SYMDL_DEFAULT_SOLVER_CMD
#define SYMDL_DEFAULT_SOLVER_CMD ""
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitUsageIo = 2;
constexpr int kExitSolver = 3;

int exit_code_for(symdl::errc code) {
    switch (code) {
        case symdl::errc::io:
        case symdl::errc::usage:
            return kExitUsageIo;
        case symdl::errc::solver:
        case symdl::errc::magic_collision:
            return kExitSolver;
        default:
            return kExitAnalysis;
    }
}

struct RunConfig {
    std::string program_path;
    std::string analysis = "custom";
    std::string facts_dir;
    std::string out_dir;
    std::string solver_cmd = SYMDL_DEFAULT_SOLVER_CMD;
    uint64_t switch_size = 0;
    uint64_t bound = 8;
    uint64_t native_max_size = 10;
    int jobs = 1;
    std::string cache_path;
    uint64_t magic_seed = 0;
    int timeout_s = 60;
    bool escalate = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) symdl::fail(symdl::errc::io, "cannot read program file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_diagnostics(const std::string& path, const symdl::SmtBridge::Stats& bridge,
                       const symdl::Dispatcher* dispatcher, const symdl::EvalStats& eval) {
    std::ofstream out(path, std::ios::binary);
    if (!out) symdl::fail(symdl::errc::io, "cannot write " + path);
    out << "metric,value\n";
    out << "queries," << bridge.queries << "\n";
    out << "solver_calls," << bridge.solver_calls << "\n";
    out << "cache_hits," << bridge.cache_hits << "\n";
    out << "timeouts," << bridge.timeouts << "\n";
    if (dispatcher) {
        symdl::Dispatcher::Stats d = dispatcher->stats();
        out << "native_queries," << d.native_queries << "\n";
        out << "native_sat," << d.native_sat << "\n";
        out << "native_unsat," << d.native_unsat << "\n";
        out << "native_unknown," << d.native_unknown << "\n";
        out << "escalations," << d.escalations << "\n";
        out << "smt_queries," << d.smt_queries << "\n";
    }
    out << "total_derived," << eval.total_derived << "\n";
    char buf[64];
    for (size_t i = 0; i < eval.strata.size(); i++) {
        const auto& s = eval.strata[i];
        std::string rels;
        for (const std::string& r : s.relations) {
            if (!rels.empty()) rels += ';';
            rels += r;
        }
        out << "stratum." << i << ".relations," << rels << "\n";
        std::snprintf(buf, sizeof(buf), "%.6f", s.seconds);
        out << "stratum." << i << ".seconds," << buf << "\n";
        out << "stratum." << i << ".derived," << s.derived << "\n";
        out << "stratum." << i << ".iterations," << s.iterations << "\n";
    }
}

int run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.jobs < 1) symdl::fail(symdl::errc::usage, "--jobs must be at least 1");
    if (cfg.timeout_s <= 0) symdl::fail(symdl::errc::usage, "--timeout must be positive");
    if (cfg.analysis != "points-to" && cfg.analysis != "symexec" && cfg.analysis != "custom")
        symdl::fail(symdl::errc::usage,
                    "--analysis must be points-to, symexec or custom, got " + cfg.analysis);
    if (cfg.analysis == "custom" && cfg.program_path.empty())
        symdl::fail(symdl::errc::usage, "--analysis custom requires --program");
    if (cfg.analysis != "custom" && !cfg.program_path.empty())
        symdl::fail(symdl::errc::usage, "--program conflicts with a bundled --analysis preset");
    if (cfg.facts_dir.empty()) symdl::fail(symdl::errc::usage, "--facts is required");
    if (cfg.out_dir.empty()) symdl::fail(symdl::errc::usage, "--out is required");
    if (!fs::is_directory(cfg.facts_dir))
        symdl::fail(symdl::errc::io, "facts directory " + cfg.facts_dir + " does not exist");
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec || !fs::is_directory(cfg.out_dir))
        symdl::fail(symdl::errc::io, "cannot create output directory " + cfg.out_dir);

    symdl::Engine engine;
    symdl::Program program;
    if (cfg.analysis == "points-to") {
        program = symdl::points_to_program();
    } else if (cfg.analysis == "symexec") {
        program = symdl::symexec_program();
    } else {
        program = symdl::parse_program(read_file(cfg.program_path));
    }

    symdl::SmtBridge::Options bopts;
    bopts.command = cfg.solver_cmd;
    bopts.cache_path = cfg.cache_path;
    bopts.timeout_ms = cfg.timeout_s * 1000;
    bopts.processes = cfg.jobs;
    bopts.magic_seed = cfg.magic_seed;
    symdl::SmtBridge bridge(bopts);

    symdl::DispatchOptions dopts;
    dopts.switch_size = cfg.switch_size;
    dopts.native_max_size = cfg.native_max_size;
    dopts.escalate = cfg.escalate;
    std::unique_ptr<symdl::Dispatcher> dispatcher;
    if (cfg.switch_size > 0) {
        dispatcher = std::make_unique<symdl::Dispatcher>(bridge, dopts);
        dispatcher->attach(engine);
    } else {
        bridge.attach(engine);
    }

    symdl::FactDB edb = symdl::load_facts(engine, cfg.facts_dir, program);
    bridge.check_magic_collisions(engine, edb);

    symdl::EvalOptions eopts;
    eopts.workers = cfg.jobs;
    if (program.consts.count("BOUND")) eopts.const_overrides["BOUND"] = cfg.bound;
    if (program.consts.count("SOLVER_MAX_SIZE"))
        eopts.const_overrides["SOLVER_MAX_SIZE"] = cfg.native_max_size;

    symdl::EvalStats stats;
    symdl::FactDB result = symdl::evaluate(engine, program, edb, eopts, &stats);

    symdl::dump_relations(engine, result, cfg.out_dir, program);
    write_diagnostics((fs::path(cfg.out_dir) / "diagnostics.csv").string(), bridge.stats(),
                      dispatcher.get(), stats);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Datalog engine with SMT-backed and native constraint solving"};
    app.require_subcommand(1);

    RunConfig cfg;
    CLI::App* run_cmd = app.add_subcommand("run", "Evaluate an analysis over a fact directory");
    run_cmd->add_option("--program", cfg.program_path, "Datalog program file (custom analysis)");
    run_cmd->add_option("--analysis", cfg.analysis, "points-to, symexec or custom");
    run_cmd->add_option("--facts", cfg.facts_dir, "directory of .facts inputs");
    run_cmd->add_option("--out", cfg.out_dir, "directory for .csv outputs");
    run_cmd->add_option("--solver-cmd", cfg.solver_cmd, "SMT solver command line");
    run_cmd->add_option("--switch-size", cfg.switch_size,
                        "conjunction size up to which the native solver answers (0 = SMT only)");
    run_cmd->add_option("--bound", cfg.bound, "path-condition length bound");
    run_cmd->add_option("--native-max-size", cfg.native_max_size,
                        "expression size bound for the native solver universe");
    run_cmd->add_option("--jobs", cfg.jobs, "evaluation workers and solver processes");
    run_cmd->add_option("--cache", cfg.cache_path, "persistent query cache file");
    run_cmd->add_option("--magic-seed", cfg.magic_seed, "seed for the magic constant pool");
    run_cmd->add_option("--timeout", cfg.timeout_s, "per-query solver timeout in seconds");
    run_cmd->add_flag("--escalate", cfg.escalate, "send native-unknown queries to the SMT path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsageIo;
    }

    try {
        return run(cfg);
    } catch (const symdl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    }
}
