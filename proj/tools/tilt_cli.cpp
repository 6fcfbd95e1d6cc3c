// Copyright 2026 the tilt-engine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: runs registered benchmarks and writes throughput reports.
//
// Exit codes: 0 success, 1 runtime failure or oracle mismatch, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "tilt/bench/report.hpp"
#include "tilt/bench/workload.hpp"

namespace {

using namespace tilt;

constexpr int kUsageError = 2;
constexpr int kRunFailure = 1;

struct RunOptions {
    std::string input;
    std::uint64_t events = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    bool no_fuse = false;
    bool oracle = false;
    std::string dump_ir;
    Ticks interval = runtime::kDefaultInterval;
    int repeat = 5;
    std::string out;
    std::string format = "csv";
};

bench::ReportFormat report_format(const std::string& f) {
    return f == "dat" ? bench::ReportFormat::Dat : bench::ReportFormat::Csv;
}

void write_reports(const std::vector<runtime::RunReport>& reports, const RunOptions& o) {
    if (!o.out.empty()) {
        bench::emit_report(reports, o.out, report_format(o.format));
        return;
    }
    const auto f = report_format(o.format);
    std::cout << bench::report_header(f) << '\n';
    for (const auto& r : reports) std::cout << bench::format_row(r, f) << '\n';
}

/// Runs one benchmark at each thread count. Returns false on an oracle mismatch.
bool run_one(const std::string& name, const RunOptions& o, const std::vector<int>& threads,
             std::vector<runtime::RunReport>& reports) {
    const auto& spec = bench::find_benchmark(name);
    auto prepared = bench::prepare(spec, {.fuse = !o.no_fuse});
    if (!o.dump_ir.empty()) std::cout << passes::dump(prepared.compiled, o.dump_ir) << '\n';
    const auto data = o.input.empty() ? bench::synthetic_dataset(spec, o.events, o.seed)
                                      : bench::file_dataset(spec, o.input);
    if (o.oracle) {
        const auto kernel = bench::run_kernel(prepared, data, threads.front(), o.interval);
        const int bad = bench::first_difference(kernel, bench::run_oracle(prepared, data));
        if (bad >= 0) {
            std::cerr << name << ": kernel output differs from the dense oracle (group " << bad << ")\n";
            return false;
        }
        std::cerr << name << ": kernel output matches the dense oracle\n";
    }
    for (int t : threads) reports.push_back(bench::measure(name, prepared, data, t, o.interval, o.repeat));
    return true;
}

void add_common(CLI::App& cmd, RunOptions& o) {
    cmd.add_option("--events", o.events, "Synthetic events per input")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Generator seed");
    cmd.add_flag("--no-fuse", o.no_fuse, "Run the query without operator fusion");
    cmd.add_flag("--oracle", o.oracle, "Cross-check kernel output against dense evaluation");
    cmd.add_option("--interval-size", o.interval, "Partition interval in ticks")->check(CLI::PositiveNumber);
    cmd.add_option("--repeat", o.repeat, "Timed runs averaged per report")->check(CLI::PositiveNumber);
    cmd.add_option("--out", o.out, "Append report rows to this file instead of printing them");
    cmd.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "dat"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal query engine benchmark driver"};
    app.require_subcommand(1);

    RunOptions run_opts;
    std::string bench_name;
    auto* run = app.add_subcommand("run", "Run one benchmark");
    run->add_option("bench", bench_name, "Benchmark name")->required();
    auto* input = run->add_option("--input", run_opts.input, "Events file (.csv or JSONL)")->check(CLI::ExistingFile);
    run->add_option("--threads", run_opts.threads, "Worker threads")
        ->envname("TILT_THREADS")
        ->check(CLI::PositiveNumber);
    run->add_option("--dump-ir", run_opts.dump_ir, "Print the IR at a stage: lowered, resolved, fused, final")
        ->check(CLI::IsMember({"lowered", "resolved", "fused", "final"}));
    add_common(*run, run_opts);
    input->excludes(run->get_option("--events"))->excludes(run->get_option("--seed"));

    RunOptions suite_opts;
    std::vector<int> sweep = {1, 2, 4, 8};
    auto* suite = app.add_subcommand("bench-suite", "Run every benchmark over a thread sweep");
    suite->add_option("--threads", sweep, "Thread counts to sweep")->check(CLI::PositiveNumber)->delimiter(',');
    add_common(*suite, suite_opts);

    app.add_subcommand("list", "List registered benchmarks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kUsageError;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& spec : bench::benchmarks()) {
                std::cout << spec.name << "\t" << spec.operators << "\t" << spec.summary << '\n';
            }
            return 0;
        }
        std::vector<runtime::RunReport> reports;
        bool ok = true;
        if (app.got_subcommand("run")) {
            try {
                (void)bench::find_benchmark(bench_name);
            } catch (const bench::RegistryError& e) {
                std::cerr << e.what() << '\n' << run->help();
                return kUsageError;
            }
            ok = run_one(bench_name, run_opts, {run_opts.threads}, reports);
            if (ok) write_reports(reports, run_opts);
        } else {
            for (const auto& name : bench::benchmark_names()) {
                ok = run_one(name, suite_opts, sweep, reports) && ok;
            }
            write_reports(reports, suite_opts);
        }
        return ok ? 0 : kRunFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunFailure;
    }
}
