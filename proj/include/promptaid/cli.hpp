#pragma once

// Command-line driver. Exit codes: 0 success, 1 user error, 2 gateway error.

#include "promptaid/report.hpp"
#include "promptaid/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iomanip>
#include <iostream>

namespace promptaid {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitGateway = 2;

namespace detail {

inline httplib::Server* g_server = nullptr;

inline void stop_server(int) {
    if (g_server) g_server->stop();
}

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

inline void print_evaluation(std::ostream& out, const EvaluationResult& r) {
    out << "accuracy " << fixed(r.accuracy) << "\n";
    std::size_t w = kUnparsed.size();
    for (const auto& l : r.confusion.labels) w = std::max(w, l.size());
    w += 2;
    out << "confusion (rows: gold, columns: predicted)\n" << std::setw(static_cast<int>(w)) << "";
    for (const auto& l : r.confusion.labels) out << std::setw(static_cast<int>(w)) << l;
    out << std::setw(static_cast<int>(w)) << kUnparsed << "\n";
    for (std::size_t i = 0; i < r.confusion.labels.size(); ++i) {
        out << std::setw(static_cast<int>(w)) << r.confusion.labels[i];
        for (long c : r.confusion.counts[i]) out << std::setw(static_cast<int>(w)) << c;
        out << "\n";
    }
    out << "per-class precision / recall\n";
    for (const auto& l : r.confusion.labels)
        out << "  " << l << "  " << fixed(r.precision.at(l)) << " / " << fixed(r.recall.at(l)) << "\n";
}

} // namespace detail

struct CliStreams {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
};

/// Parses and runs one command.
inline int run_cli(int argc, const char* const* argv, CliStreams io = {}) {
    CLI::App app{"promptaid: prompt template evaluation and perturbation workbench", "promptaid"};
    app.require_subcommand(1);

    std::string config_path, dataset, model, template_text, word, json_out, session_path, out_dir;
    int samples = kDefaultSamplesPerType;
    std::uint64_t seed = 7;
    bool seed_given = false;

    auto add_engine_flags = [&](CLI::App* sub, bool needs_template) {
        sub->add_option("--config", config_path, "config file")->required();
        sub->add_option("--dataset", dataset, "dataset name (default: first configured)");
        sub->add_option("--model", model, "model id (default: first configured)");
        if (needs_template) sub->add_option("--template", template_text, "template text with a [text] placeholder")->required();
        sub->add_option("--json", json_out, "write the JSON result to this file ('-' for stdout)");
    };

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");
    serve_cmd->add_option("--config", config_path, "config file")->required();
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a template on the test split");
    add_engine_flags(eval_cmd, true);
    auto* kw_cmd = app.add_subcommand("keywords", "keyword suggestions for one word of a template");
    add_engine_flags(kw_cmd, true);
    kw_cmd->add_option("--word", word, "word to replace")->required();
    kw_cmd->add_option("--seed", seed, "layout seed");
    auto* para_cmd = app.add_subcommand("paraphrases", "filtered paraphrase suggestions");
    add_engine_flags(para_cmd, true);
    para_cmd->add_option("--seed", seed, "layout seed");
    auto* sweep_cmd = app.add_subcommand("kshot-sweep", "select k-shot examples for k in 1..5 and keep the best k");
    add_engine_flags(sweep_cmd, true);
    auto* sens_cmd = app.add_subcommand("sensitivities", "average accuracy of sampled next-step perturbations");
    add_engine_flags(sens_cmd, true);
    sens_cmd->add_option("--samples", samples, "variants per perturbation type")->check(CLI::PositiveNumber);
    sens_cmd->add_option("--seed", seed, "sampling seed");
    auto* report_cmd = app.add_subcommand("report", "write leaderboard, provenance, metrics and an SVG canvas");
    report_cmd->add_option("--session", session_path, "session file")->required();
    report_cmd->add_option("--out", out_dir, "output directory")->required();
    report_cmd->add_option("--config", config_path, "config file (embedding backend for the canvas)");
    report_cmd->add_option("--seed", seed, "projection seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        io.out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        io.out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << "\n" << app.help();
        return kExitUser;
    }
    for (auto* sub : {kw_cmd, para_cmd, report_cmd, sens_cmd})
        if (sub->parsed() && sub->count("--seed") > 0) seed_given = true;

    auto emit = [&](const json& j) {
        if (json_out.empty()) return;
        const auto body = j.dump(2) + "\n";
        if (json_out == "-") {
            io.out << body;
            return;
        }
        std::ofstream f(json_out, std::ios::binary | std::ios::trunc);
        f << body;
        if (!f) fail(ErrorCode::IoError, "cannot write JSON output", json_out);
    };
    const bool human = json_out != "-";

    try {
        if (serve_cmd->parsed()) {
            Workbench wb(load_config(config_path));
            httplib::Server server;
            detail::g_server = &server;
            std::signal(SIGINT, detail::stop_server);
            std::signal(SIGTERM, detail::stop_server);
            io.err << "listening on " << wb.config().host << ":" << wb.config().port << "\n";
            serve(server, wb);
            detail::g_server = nullptr;
            if (!wb.config().session_file.empty()) wb.save();
            return kExitOk;
        }

        if (report_cmd->parsed()) {
            const auto state = load_session(session_path);
            EmbeddingConfig ec;
            std::uint64_t report_seed = seed;
            if (!config_path.empty()) {
                const auto cfg = load_config(config_path);
                ec = cfg.embedding;
                if (!seed_given) report_seed = cfg.default_seed;
            }
            const Embedder embedder(make_embedding_backend(ec));
            for (const auto& p : write_report(state, embedder, out_dir, report_seed)) io.out << p.string() << "\n";
            return kExitOk;
        }

        WorkbenchOptions opts;
        opts.load_session_file = false;
        opts.create_seeds = false;
        Workbench wb(load_config(config_path), opts);
        if (!dataset.empty() || !model.empty()) {
            const auto s = wb.session();
            wb.select(dataset.empty() ? s.at("dataset").get<std::string>() : dataset,
                      model.empty() ? s.at("model").get<std::string>() : model);
        }
        std::optional<std::uint64_t> maybe_seed;
        if (seed_given) maybe_seed = seed;

        if (eval_cmd->parsed()) {
            const auto r = wb.evaluate_text(template_text);
            if (human) detail::print_evaluation(io.out, r);
            emit(json(r));
            return kExitOk;
        }

        const auto id = wb.create_template(template_text).at("id").get<std::string>();
        if (kw_cmd->parsed()) {
            const auto j = wb.keywords(id, word, maybe_seed);
            if (human)
                for (const auto& s : j.at("suggestions"))
                    io.out << s.at("bucket").get<std::string>() << "  " << s.at("word").get<std::string>() << "  "
                           << detail::fixed(s.at("distance").get<double>(), 4) << "\n";
            emit(j);
        } else if (para_cmd->parsed()) {
            const auto j = wb.paraphrases(id, maybe_seed);
            if (human) {
                io.out << "theta " << j.at("theta").get<int>() << "\n";
                for (const auto& s : j.at("suggestions"))
                    io.out << s.at("distance_to_seed").get<std::size_t>() << "  " << s.at("text").get<std::string>() << "\n";
            }
            emit(j);
        } else if (sweep_cmd->parsed()) {
            const auto j = wb.kshot(id);
            if (human) {
                const auto acc = j.at("accuracy_by_k").get<std::vector<double>>();
                for (std::size_t k = 0; k < acc.size(); ++k) io.out << "k=" << k + 1 << "  accuracy " << detail::fixed(acc[k]) << "\n";
                io.out << "best_k=" << j.at("best_k").get<int>() << "\n";
            }
            emit(j);
        } else if (sens_cmd->parsed()) {
            const auto j = wb.sensitivities(id, samples, maybe_seed);
            if (human) {
                auto show = [](const json& v) { return v.is_null() ? std::string("n/a") : detail::fixed(v.get<double>()); };
                io.out << "keyword " << show(j.at("keyword_avg")) << "\nparaphrase " << show(j.at("paraphrase_avg")) << "\n";
            }
            emit(j);
        }
        return kExitOk;
    } catch (const Error& e) {
        io.err << "error: " << to_string(e.code()) << ": " << e.message();
        if (!e.detail().empty()) io.err << " (" << e.detail() << ")";
        io.err << "\n";
        return e.error_class() == ErrorClass::Gateway ? kExitGateway : kExitUser;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << "\n";
        return kExitUser;
    }
}

} // namespace promptaid
