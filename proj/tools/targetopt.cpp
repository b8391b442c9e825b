// targetopt command-line driver.
//
//   targetopt bench --config study.json [--seed N] [--out DIR] [--paths N] [--threads N]
//   targetopt plot --results DIR/quantile_curves.csv [--out DIR] [--column actual_q]
//   targetopt init-design --config loop.json [--out DIR]
//   targetopt observe --state DIR/state.json --measurements FILE
//   targetopt suggest --state DIR/state.json [--measurements FILE] [--out DIR]
//
// The default output directory comes from TARGETOPT_OUT, else "results".
// Exit codes: 0 ok, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <targetopt/targetopt.hpp>

namespace fs = std::filesystem;
using namespace targetopt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string default_out()
{
    if (const char* env = std::getenv("TARGETOPT_OUT"); env && *env)
        return env;
    return "results";
}

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> threads;
    std::string results;
    std::string column = "actual_q";
    std::string state;
    std::string measurements;
};

int cmd_bench(const Options& o)
{
    StudyConfig cfg = parse_study_config(read_file(o.config));
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.paths)
        cfg.paths = *o.paths;
    if (o.threads)
        cfg.threads = *o.threads;
    if (!o.out.empty())
        cfg.output = o.out;
    else if (std::getenv("TARGETOPT_OUT"))
        cfg.output = default_out();
    validate(cfg);

    const auto cells = run_study(cfg);
    const fs::path dir = cfg.output;
    const auto files = write_study(cells, cfg, dir);
    write_file_atomic(dir / "study.json", serialize_study_config(cfg));

    std::size_t failures = 0;
    for (const auto& c : cells) {
        failures += c.errors.size();
        std::cout << c.key.method << " model " << c.key.model << " sigma " << c.key.sigma << " l " << c.key.replicates << ": "
                  << c.traces.size() << " paths, " << c.seconds << " s\n";
    }
    std::cout << "wrote " << files.raw.string() << "\n";
    if (failures)
        std::cerr << failures << " paths failed, see " << files.errors.string() << "\n";
    return 0;
}

int cmd_plot(const Options& o)
{
    const fs::path dir = o.out.empty() ? fs::path(default_out()) : fs::path(o.out);
    for (const auto& f : write_plots(read_file(o.results), dir, o.column))
        std::cout << "wrote " << f.string() << "\n";
    return 0;
}

fs::path state_dir(const Options& o)
{
    if (!o.out.empty())
        return o.out;
    if (!o.state.empty())
        return fs::path(o.state).parent_path();
    return default_out();
}

void write_step(const LoopState& s, const std::vector<SuggestionRow>& rows, const fs::path& statePath, const fs::path& dir)
{
    const auto suggestions = dir / "suggestions.csv";
    write_file_atomic(suggestions, write_suggestions_csv(rows, s.config.space.dim()));
    write_file_atomic(statePath, serialize_state(s));
    std::cout << "iteration " << s.iteration << ": " << rows.size() << " measurements requested, see " << suggestions.string()
              << "\n";
}

int cmd_init(const Options& o)
{
    LoopConfig cfg;
    try {
        cfg = loop_config_from_json(nlohmann::json::parse(read_file(o.config)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    if (o.seed)
        cfg.seed = *o.seed;
    const LoopState s = init_state(cfg);
    const fs::path dir = o.out.empty() ? fs::path(default_out()) : fs::path(o.out);
    write_step(s, outstanding(s), dir / "state.json", dir);
    return 0;
}

LoopState load_state(const Options& o)
{
    LoopState s = deserialize_state(read_file(o.state));
    if (!o.measurements.empty())
        s = ingest(std::move(s), read_dataset_csv(read_file(o.measurements), s.config.space.dim(), s.config.target.dim()));
    return s;
}

int cmd_observe(const Options& o)
{
    const LoopState s = load_state(o);
    write_file_atomic(o.state, serialize_state(s));
    std::cout << s.data.size() << " measurements stored, " << outstanding(s).size() << " outstanding\n";
    return 0;
}

int cmd_suggest(const Options& o)
{
    const auto step = suggest(load_state(o));
    write_step(step.state, step.suggestions, o.state, state_dir(o));
    return 0;
}

bool is_config_error(ErrorCode c)
{
    return c == ErrorCode::ConfigError || c == ErrorCode::UnknownModelId;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Target-oriented sequential optimization via dimension reduction"};
    app.require_subcommand(1);
    Options o;

    auto* bench = app.add_subcommand("bench", "Run a simulation study");
    bench->add_option("--config", o.config, "Study config (JSON)")->required()->check(CLI::ExistingFile);
    bench->add_option("--seed", o.seed, "Override the master seed");
    bench->add_option("--out", o.out, "Output directory");
    bench->add_option("--paths", o.paths, "Override the number of simulation paths")->check(CLI::PositiveNumber);
    bench->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "Render quantile curves as SVG");
    plot->add_option("--results", o.results, "quantile_curves.csv from bench")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", o.out, "Output directory");
    plot->add_option("--column", o.column, "observed_q, actual_q or best_actual_q");

    auto* init = app.add_subcommand("init-design", "Create a loop state and the initial design");
    init->add_option("--config", o.config, "Loop config (JSON)")->required()->check(CLI::ExistingFile);
    init->add_option("--seed", o.seed, "Override the design seed");
    init->add_option("--out", o.out, "Output directory");

    auto* observe = app.add_subcommand("observe", "Add measurements to a loop state");
    observe->add_option("--state", o.state, "State file")->required()->check(CLI::ExistingFile);
    observe->add_option("--measurements", o.measurements, "Measurement file")->required()->check(CLI::ExistingFile);

    auto* suggestCmd = app.add_subcommand("suggest", "Write the next points to measure");
    suggestCmd->add_option("--state", o.state, "State file")->required()->check(CLI::ExistingFile);
    suggestCmd->add_option("--measurements", o.measurements, "Measurement file ingested first")->check(CLI::ExistingFile);
    suggestCmd->add_option("--out", o.out, "Directory for suggestions.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*bench)
            return cmd_bench(o);
        if (*plot)
            return cmd_plot(o);
        if (*init)
            return cmd_init(o);
        if (*observe)
            return cmd_observe(o);
        if (*suggestCmd)
            return cmd_suggest(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
