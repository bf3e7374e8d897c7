#include "drnav/config.hpp"
#include "drnav/dataset_io.hpp"
#include "drnav/harness.hpp"
#include "drnav/tracks.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace drnav;

namespace {

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

std::vector<std::string> split_csv(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Drone racing navigation: data collection, training and evaluation"};
    app.require_subcommand(1);
    std::string config_path;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON config file (missing keys keep defaults)");
    app.add_flag("-q,--quiet", quiet, "suppress progress output");

    // collect
    auto* collect_cmd = app.add_subcommand("collect", "fly randomized trials and record labelled samples");
    std::string mode = "expert", out_path, ckpt_path;
    double epsilon = 0.0;
    int trials = -1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    collect_cmd->add_option("--mode", mode)->check(CLI::IsMember({"expert", "dagger"}));
    collect_cmd->add_option("--epsilon", epsilon, "recovery margin in m (dagger)")->check(CLI::NonNegativeNumber);
    collect_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
    collect_cmd->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
    collect_cmd->add_option("--ckpt", ckpt_path, "network flown in dagger mode")->check(CLI::ExistingFile);
    collect_cmd->add_option("--out", out_path)->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a network on one or more datasets");
    std::vector<std::string> data_paths;
    int epochs = -1;
    bool from_scratch = false;
    std::string arch, init_path, train_out;
    train_cmd->add_option("--data", data_paths)->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
    train_cmd->add_flag("--from-scratch", from_scratch, "ignore --init and start from random weights");
    train_cmd->add_option("--arch", arch)->check(CLI::IsMember({"full", "baseline"}));
    train_cmd->add_option("--init", init_path, "checkpoint to continue from")->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
    train_cmd->add_option("--out", train_out)->required();

    // schedule
    auto* sched_cmd = app.add_subcommand("schedule", "expert round plus DAgger rounds, retraining after each");
    std::string out_dir, sched_report;
    bool fine_tune = false;
    sched_cmd->add_option("--out-dir", out_dir, "checkpoint directory (overrides the config)");
    sched_cmd->add_flag("--fine-tune", fine_tune, "continue from the previous round instead of retraining");
    sched_cmd->add_option("--report", sched_report, "per-round CSV");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "closed-loop completion on an evaluation track");
    std::string track = "easy", report_path, nav_mode;
    double vmax = -1.0;
    int loops = -1;
    eval_cmd->add_option("--ckpt", ckpt_path, "network checkpoint; the expert flies when omitted")->check(CLI::ExistingFile);
    eval_cmd->add_option("--track", track, "easy, difficult, dynamic or a track JSON file");
    eval_cmd->add_option("--vmax", vmax)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--loops", loops)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
    eval_cmd->add_option("--mode", nav_mode)->check(CLI::IsMember({"nav_direction", "gate_center"}));
    eval_cmd->add_option("--report", report_path);

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "retrain with one randomization factor disabled at a time");
    std::string disable;
    ablate_cmd->add_option("--disable", disable, "comma-separated factors (default from config)");
    ablate_cmd->add_option("--report", report_path);

    // track
    auto* track_cmd = app.add_subcommand("track", "export a built-in track as JSON");
    std::string track_name;
    track_cmd->add_option("--name", track_name)->required()->check(CLI::IsMember({"easy", "difficult", "dynamic"}));
    track_cmd->add_option("--out", out_path)->required();

    // config
    auto* config_cmd = app.add_subcommand("config", "write the effective configuration as JSON");
    config_cmd->add_option("--out", out_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg = config_path.empty() ? AppConfig{} : load_config(config_path);
        Settings& st = cfg.settings;
        if (!quiet) st.log = &std::cerr;

        if (*collect_cmd) {
            DaggerConfig dc = cfg.schedule.collect;
            if (trials > 0) dc.trials = trials;
            if (seed_given) dc.seed = seed;
            CollectResult res;
            if (mode == "dagger") {
                if (ckpt_path.empty()) throw Error("collect: dagger mode needs --ckpt");
                dc.epsilon = epsilon;
                const auto params = read_checkpoint(ckpt_path, standard_configs(st.pilot.image_width, st.pilot.image_height));
                res = collect_dagger(params, dc, st);
            } else {
                res = collect_expert(dc, st);
            }
            write_dataset(out_path, res.data);
            int crashes = 0;
            for (const auto& e : res.episodes) crashes += e.crashed ? 1 : 0;
            std::cout << res.data.size() << " samples from " << res.episodes.size() << " trials (" << res.skipped
                      << " skipped, " << crashes << " crashed, expert ticks " << res.expert_ticks << ", learner ticks "
                      << res.learner_ticks << ") -> " << out_path << '\n';
        } else if (*train_cmd) {
            Dataset data;
            data.width = st.pilot.image_width;
            data.height = st.pilot.image_height;
            for (const auto& p : data_paths) data.append(read_dataset(p));
            TrainConfig tc = cfg.schedule.train;
            if (epochs > 0) tc.epochs = epochs;
            if (!arch.empty()) tc.net.arch = parse_arch(arch);
            if (seed_given) tc.seed = seed;
            std::optional<NetParams<float>> init;
            tc.from_scratch = from_scratch || init_path.empty();
            if (!tc.from_scratch) init = read_checkpoint(init_path, tc.net);
            const auto res = train(data, tc, init ? &*init : nullptr);
            write_checkpoint(train_out, res.params);
            std::cout << "trained " << to_string(tc.net.arch) << " on " << data.size() << " samples, final loss "
                      << res.epoch_loss.back() << " -> " << train_out << '\n';
        } else if (*sched_cmd) {
            ScheduleConfig sc = cfg.schedule;
            if (!out_dir.empty()) sc.out_dir = out_dir;
            if (fine_tune) sc.fine_tune = true;
            const auto res = run_schedule(sc, st);
            std::ostringstream csv;
            csv << "round,epsilon,new_samples,total_samples,expert_ticks,learner_ticks,final_train_loss,test_loss,checkpoint\n";
            for (const auto& r : res.rounds)
                csv << r.round << ',' << r.epsilon << ',' << r.new_samples << ',' << r.total_samples << ',' << r.expert_ticks
                    << ',' << r.learner_ticks << ',' << r.train_trace.back() << ',' << r.test_loss << ',' << r.checkpoint
                    << '\n';
            std::cout << csv.str();
            if (!sched_report.empty()) write_text(sched_report, csv.str());
        } else if (*eval_cmd) {
            EvalConfig ec = cfg.eval;
            if (vmax > 0) ec.v_max = vmax;
            if (trials > 0) ec.trials = trials;
            if (loops > 0) ec.loops = loops;
            if (seed_given) ec.seed = seed;
            if (!nav_mode.empty()) ec.mode = nav_mode == "gate_center" ? NavMode::gate_center : NavMode::nav_direction;
            std::optional<NetParams<float>> params;
            if (!ckpt_path.empty())
                params = read_checkpoint(ckpt_path, standard_configs(st.pilot.image_width, st.pilot.image_height));
            if (ec.mode == NavMode::gate_center && params && params->config.arch != NetArch::full)
                throw Error("eval: gate_center mode needs the full architecture");
            const auto rep = evaluate(load_track(track), params ? &*params : nullptr, ec, st);
            std::cout << rep.csv();
            if (!report_path.empty()) write_text(report_path, rep.csv());
        } else if (*ablate_cmd) {
            const auto factors = disable.empty() ? cfg.ablation_factors : split_csv(disable);
            const auto rows = ablate(factors, cfg.schedule, st);
            std::cout << ablation_csv(rows);
            if (!report_path.empty()) write_text(report_path, ablation_csv(rows));
        } else if (*track_cmd) {
            write_text(out_path, track_to_json(builtin_track(track_name)).dump(2) + "\n");
        } else if (*config_cmd) {
            write_text(out_path, config_to_json(cfg).dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
