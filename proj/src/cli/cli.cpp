#include "arforge/cli/cli.hpp"

#include <cstdlib>
#include <functional>
#include <ostream>
#include <vector>

#include "CLI11.hpp"

#include "arforge/pipeline/pipeline.hpp"

namespace arforge::cli {

namespace fs = std::filesystem;
using pipeline::ExperimentConfig;
using pipeline::Pipeline;

std::optional<ReportFormat> parse_format(const std::string &text) {
    if (text == "json") return ReportFormat::json;
    if (text == "table") return ReportFormat::table;
    return std::nullopt;
}

std::string emit_report(const metrics::ExperimentReport &report, ReportFormat format) {
    return format == ReportFormat::json ? metrics::render_json(report) : metrics::render_table(report);
}

namespace {

struct Overrides {
    std::string config;
    std::optional<std::size_t> beam;
    std::optional<double> alpha;
    std::optional<double> max_len_factor;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> run_dir;
    std::optional<std::string> strategy;
    std::string format = "table";
};

void add_common(CLI::App &cmd, Overrides &o, bool decode, bool strategy, bool report) {
    cmd.add_option("-c,--config", o.config, "experiment config (JSON)")->required();
    cmd.add_option("--seed", o.seed, "master seed");
    cmd.add_option("--run-dir", o.run_dir, "output directory (also AR_FORGE_RUN_DIR)");
    if (decode) {
        cmd.add_option("--beam", o.beam, "beam size");
        cmd.add_option("--alpha", o.alpha, "length penalty exponent");
        cmd.add_option("--max-len-factor", o.max_len_factor, "max output length per source token");
    }
    if (strategy) cmd.add_option("--strategy", o.strategy, "only this strategy (e.g. BTR_ADD)");
    if (report) cmd.add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "table"}));
}

ExperimentConfig effective_config(const Overrides &o) {
    ExperimentConfig c = pipeline::load_config(o.config);
    if (const char *env = std::getenv("AR_FORGE_RUN_DIR"); env && *env) c.run_dir = env;
    if (o.run_dir) c.run_dir = *o.run_dir;
    if (o.seed) c.seed = *o.seed;
    if (o.beam) c.decode.beam_size = *o.beam;
    if (o.alpha) c.decode.length_alpha = *o.alpha;
    if (o.max_len_factor) c.decode.max_len_factor = *o.max_len_factor;
    if (o.strategy) {
        const auto s = corpus::parse_strategy(*o.strategy);
        if (!s) throw pipeline::ConfigError("--strategy: unknown strategy '" + *o.strategy + "'");
        if (std::find(c.strategies.begin(), c.strategies.end(), *s) == c.strategies.end())
            throw pipeline::ConfigError("--strategy: " + *o.strategy + " is not in the configured strategy list");
    }
    c.validate();
    return c;
}

std::optional<corpus::Strategy> selected(const Overrides &o) {
    if (!o.strategy) return std::nullopt;
    return corpus::parse_strategy(*o.strategy);
}

} // namespace

int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Auto-repair data augmentation experiments for toy-scale NMT", "arforge"};
    app.require_subcommand(1);
    app.fallthrough(false);

    Overrides o;
    using Action = std::function<void(Pipeline &)>;
    std::vector<std::pair<CLI::App *, Action>> commands;
    const auto format = [&] { return *parse_format(o.format); };

    auto add = [&](const char *name, const char *help, bool decode, bool strategy, bool report, Action action) {
        CLI::App *cmd = app.add_subcommand(name, help);
        add_common(*cmd, o, decode, strategy, report);
        commands.emplace_back(cmd, std::move(action));
    };

    add("learn-bpe", "learn BPE merges on the training and monolingual text", false, false, false,
        [](Pipeline &p) { p.learn_bpe(); });
    add("pretrain", "train the S2T and T2S base models", false, false, false, [](Pipeline &p) { p.pretrain(); });
    add("synth", "back- and forward-translate the monolingual text", true, false, false,
        [](Pipeline &p) { p.synthesize(); });
    add("ar-data", "build round-trip repair pairs and their dev split", true, false, false,
        [](Pipeline &p) { p.make_ar_data(); });
    add("train-ar", "train the S2S and T2T repair models", false, false, false, [](Pipeline &p) { p.train_ar(); });
    add("repair", "repair the synthetic corpora", true, false, false, [](Pipeline &p) { p.repair(); });
    add("mix", "write the mixture plan of every strategy", false, false, false,
        [](Pipeline &p) { p.write_plans(); });
    add("train", "train one model per strategy", false, true, false,
        [&](Pipeline &p) { p.train_strategies(selected(o)); });
    add("evaluate", "score the strategy models on the test set", true, true, true, [&](Pipeline &p) {
        auto report = p.evaluate(selected(o));
        report.repairs = p.stored_ar_reports();
        if (!o.strategy) p.write_report(report);
        out << emit_report(report, format());
    });
    add("ar-report", "score the repair models on their dev sets", true, false, true, [&](Pipeline &p) {
        metrics::ExperimentReport report;
        report.repairs = p.ar_report();
        out << emit_report(report, format());
    });
    add("run-all", "run every stage, resuming from the ledger", true, false, true, [&](Pipeline &p) {
        const auto result = p.run_all();
        err << "training steps this run: " << result.training_steps << "\n";
        out << emit_report(result.report, format());
    });

    if (argc > 1 && argv[1][0] != '-') {
        bool known = false;
        for (const auto &[cmd, action] : commands) known = known || cmd->check_name(argv[1]);
        if (!known) {
            err << "error[usage]: unknown subcommand '" << argv[1] << "'\n" << app.help();
            return kExitUsage;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error[usage]: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        ExperimentConfig config = effective_config(o);
        Pipeline pipeline(std::move(config), [&](const std::string &line) { err << line << "\n" << std::flush; });
        for (auto &[cmd, action] : commands)
            if (cmd->parsed()) action(pipeline);
    } catch (const pipeline::ConfigError &e) {
        err << "error[config]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pipeline::StageError &e) {
        err << "error[stage]: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception &e) {
        err << "error[stage]: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitOk;
}

} // namespace arforge::cli
