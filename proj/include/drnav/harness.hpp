#pragma once

#include "drnav/dataset_io.hpp"
#include "drnav/pilot.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

namespace drnav {

inline double completion_rate(int gates_passed, int total)
{
    if (total <= 0 || gates_passed < 0 || gates_passed > total) throw Error("completion_rate: need 0 <= passed <= total, total > 0");
    return 100.0 * gates_passed / total;
}

/// Everything an episode needs besides the world and the policy.
struct Settings {
    ExpertConfig expert;
    PilotConfig pilot;
    CameraModel camera;
    QuadrotorParams quad;
    double dt = 0.002;
    std::ostream* log = nullptr;

    void say(const std::string& msg) const
    {
        if (log) *log << msg << std::endl;
    }
};

struct EpisodeConfig {
    double duration = 20.0;   ///< s
    int loops = 5;
    double sample_rate = 0.0;  ///< Hz; 0 disables recording
};

struct EpisodeResult {
    int gates_passed = 0;
    int total_gates = 0;
    bool crashed = false;
    CrashCause cause = CrashCause::none;
    int crash_gate = -1;
    bool finished = false;     ///< all loops flown
    double t_end = 0.0;
    int expert_ticks = 0;      ///< replan ticks flown by the expert under margin switching
    int learner_ticks = 0;

    int loops(int gate_count) const { return gate_count > 0 ? gates_passed / gate_count : 0; }
};

/// Called for every recorded sample with the state and world it was labelled from.
using SampleObserver =
    std::function<void(const TrainingSample&, const DroneState&, const World&, int next_gate, const ExpertLabel&)>;

/// At rest halfway along the global trajectory's last segment, facing along it.
/// The first gate to pass is gate 0.
inline DroneState start_state(const PiecewiseTrajectory& traj)
{
    const std::size_t last = traj.segments().size() - 1;
    const double t = traj.segment_start(last) + 0.5 * traj.segments()[last].duration;
    DroneState s;
    s.position = traj.position(t);
    const Vec3 v = traj.velocity(t);
    s.orientation = from_euler_zyx(std::atan2(v.y(), v.x()), 0.0, 0.0);
    return s;
}

inline bool has_moving_gates(const World& w)
{
    return std::any_of(w.gates.begin(), w.gates.end(), [](const Gate& g) { return g.motion && g.motion->amplitude != 0.0; });
}

/// Flies one closed-loop episode. When `record` is given, samples are taken
/// at replan ticks no more often than `sample_rate`, labelled by the expert.
inline EpisodeResult run_episode(const World& world, const std::shared_ptr<const ExpertReference>& ref, Policy& policy,
                                 const Settings& st, const EpisodeConfig& ec, Dataset* record = nullptr,
                                 std::uint32_t episode_id = 0, const SampleObserver& observer = nullptr)
{
    if (world.gates.empty()) throw Error("episode: world has no gates");
    PilotConfig pcfg = st.pilot;
    pcfg.v_max = world.v_max;
    Pilot pilot(pcfg, st.camera, st.quad);
    pilot.render_always = record != nullptr;
    const ExpertPolicy labeller(ref, st.expert, st.camera, world.v_max);
    auto* margin = dynamic_cast<MarginSwitchPolicy*>(&policy);
    const bool moving = has_moving_gates(world);
    const int n = static_cast<int>(world.gates.size());

    EpisodeResult res;
    res.total_gates = ec.loops * n;
    DroneState s = start_state(ref->traj);
    pilot.reset(s);
    int next_gate = 0;
    double next_sample = 0.0;
    const auto steps = static_cast<long>(std::llround(ec.duration / st.dt));
    World now = world;
    for (long k = 0; k < steps; ++k) {
        const ControlInput u = pilot.step(s, now, next_gate, policy);
        if (pilot.diagnostics().replanned) {
            if (margin) (margin->last_was_expert() ? res.expert_ticks : res.learner_ticks)++;
            if (record && ec.sample_rate > 0.0 && s.t >= next_sample - 1e-9) {
                const ExpertLabel label = labeller.label(s, now, next_gate);
                TrainingSample smp;
                smp.episode = episode_id;
                smp.timestamp = s.t;
                smp.image = pilot.last_image()->rgb;
                smp.features = pilot.features();
                smp.label = pack_label(label);
                if (observer) observer(smp, s, now, next_gate, label);
                record->samples.push_back(std::move(smp));
                next_sample = s.t + 1.0 / ec.sample_rate;
            }
        }
        const DroneState s_new = step_dynamics(s, u, st.dt, st.quad);
        if (moving) now = update_gates(world, s_new.t);
        const GateEvent ev = detect_gate_event(s.position, s_new.position, now, next_gate);
        s = s_new;
        if (ev.kind == EventKind::crashed) {
            res.crashed = true;
            res.cause = ev.cause;
            res.crash_gate = ev.gate_index;
            break;
        }
        if (ev.kind == EventKind::passed) {
            ++res.gates_passed;
            next_gate = (next_gate + 1) % n;
            if (res.gates_passed >= res.total_gates) {
                res.finished = true;
                break;
            }
        }
    }
    res.t_end = s.t;
    return res;
}

/// Per-round data collection settings.
struct DaggerConfig {
    double epsilon = 0.0;        ///< m; only used when a network is given
    int trials = 20;
    double trial_duration = 20.0;
    double sample_rate = 10.0;
    RandomizationSpec rand_spec = [] {
        RandomizationSpec r;
        r.jitter_max = 1.0;
        return r;
    }();
    TrackLayout layout;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (!(epsilon >= 0.0)) throw Error("dagger config: epsilon must be >= 0");
        if (trials < 1) throw Error("dagger config: trials must be >= 1");
        if (!(sample_rate > 0.0) || !(trial_duration > 0.0)) throw Error("dagger config: bad sample rate or duration");
    }
};

struct CollectResult {
    Dataset data;
    std::vector<EpisodeResult> episodes;
    int skipped = 0;
    int expert_ticks = 0;
    int learner_ticks = 0;
};

inline std::shared_ptr<const ExpertReference> global_reference(const World& w)
{
    std::vector<Vec3> centers;
    for (const auto& g : w.gates) centers.push_back(g.nominal);
    return std::make_shared<const ExpertReference>(min_snap_global(centers, w.v_max, true));
}

/// Expert-only collection when `params` is null, margin-switched DAgger otherwise.
/// Stored labels are always the expert's.
inline CollectResult collect(const DaggerConfig& cfg, const Settings& st, const NetParams<float>* params = nullptr,
                             const SampleObserver& observer = nullptr)
{
    cfg.validate();
    CollectResult out;
    out.data.width = st.pilot.image_width;
    out.data.height = st.pilot.image_height;
    std::shared_ptr<const NetParams<float>> net;
    if (params) net = std::make_shared<const NetParams<float>>(*params);
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const World world = randomize_world(cfg.rand_spec, mix_seed(cfg.seed, static_cast<std::uint64_t>(trial)), cfg.layout);
        std::shared_ptr<const ExpertReference> ref;
        try {
            ref = global_reference(world);
        } catch (const Error& e) {
            st.say("trial " + std::to_string(trial) + ": skipped, " + e.what());
            ++out.skipped;
            continue;
        }
        auto expert = std::make_shared<ExpertPolicy>(ref, st.expert, st.camera, world.v_max);
        std::shared_ptr<Policy> policy = expert;
        if (net) policy = std::make_shared<MarginSwitchPolicy>(expert, std::make_shared<NetworkPolicy>(net), cfg.epsilon);
        const EpisodeConfig ec{cfg.trial_duration, 5, cfg.sample_rate};
        const auto r = run_episode(world, ref, *policy, st, ec, &out.data, static_cast<std::uint32_t>(trial), observer);
        out.expert_ticks += r.expert_ticks;
        out.learner_ticks += r.learner_ticks;
        out.episodes.push_back(r);
    }
    return out;
}

inline CollectResult collect_expert(const DaggerConfig& cfg, const Settings& st, const SampleObserver& observer = nullptr)
{
    return collect(cfg, st, nullptr, observer);
}

inline CollectResult collect_dagger(const NetParams<float>& params, const DaggerConfig& cfg, const Settings& st,
                                    const SampleObserver& observer = nullptr)
{
    return collect(cfg, st, &params, observer);
}

// ---------------------------------------------------------------------------
// Training schedule

struct ScheduleConfig {
    DaggerConfig collect;
    std::vector<double> epsilons{0.5, 1.0, 1.5};
    TrainConfig train;
    bool fine_tune = false;       ///< continue from the previous round instead of re-initializing
    int test_trials = 5;          ///< held-out expert trials with test-family textures
    std::uint64_t test_seed = 0x7E57;
    std::string out_dir;          ///< checkpoints and datasets are written here when set
};

struct RoundReport {
    int round = 0;
    double epsilon = 0.0;         ///< 0 for the expert round
    std::size_t new_samples = 0;
    std::size_t total_samples = 0;
    int expert_ticks = 0;
    int learner_ticks = 0;
    std::vector<double> train_trace;
    double test_loss = 0.0;
    std::string checkpoint;
};

struct ScheduleResult {
    std::vector<NetParams<float>> checkpoints;  ///< one per round
    std::vector<RoundReport> rounds;

    const NetParams<float>& final_params() const { return checkpoints.back(); }
};

inline Dataset held_out_set(const ScheduleConfig& cfg, const Settings& st)
{
    DaggerConfig t = cfg.collect;
    t.trials = cfg.test_trials;
    t.seed = cfg.test_seed;
    t.rand_spec.texture_family = TextureFamily::test;
    return collect_expert(t, st).data;
}

/// Expert round, then one margin-switched round per epsilon; every round
/// retrains on all data gathered so far.
inline ScheduleResult run_schedule(const ScheduleConfig& cfg, const Settings& st, const Dataset* test_set = nullptr)
{
    Dataset test_local;
    if (!test_set) {
        test_local = held_out_set(cfg, st);
        test_set = &test_local;
    }
    if (test_set->empty()) throw Error("schedule: held-out set is empty");
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

    ScheduleResult out;
    Dataset all;
    all.width = st.pilot.image_width;
    all.height = st.pilot.image_height;
    const std::size_t rounds = 1 + cfg.epsilons.size();
    for (std::size_t r = 0; r < rounds; ++r) {
        DaggerConfig dc = cfg.collect;
        dc.seed = mix_seed(cfg.collect.seed, r);
        RoundReport rep;
        rep.round = static_cast<int>(r);
        CollectResult got;
        if (r == 0) {
            got = collect_expert(dc, st);
        } else {
            dc.epsilon = cfg.epsilons[r - 1];
            rep.epsilon = dc.epsilon;
            got = collect_dagger(out.checkpoints.back(), dc, st);
        }
        rep.new_samples = got.data.size();
        rep.expert_ticks = got.expert_ticks;
        rep.learner_ticks = got.learner_ticks;
        all.append(got.data);
        rep.total_samples = all.size();
        if (all.empty()) throw Error("schedule: no samples collected in round " + std::to_string(r));

        TrainConfig tc = cfg.train;
        tc.seed = mix_seed(cfg.train.seed, r);
        tc.from_scratch = r == 0 || !cfg.fine_tune;
        auto trained = train(all, tc, r == 0 ? nullptr : &out.checkpoints.back());
        rep.train_trace = std::move(trained.epoch_loss);
        rep.test_loss = dataset_loss(*test_set, trained.params, cfg.train.weights);
        if (!cfg.out_dir.empty()) {
            rep.checkpoint = (std::filesystem::path(cfg.out_dir) / ("round" + std::to_string(r) + ".ckpt")).string();
            write_checkpoint(rep.checkpoint, trained.params);
        }
        std::ostringstream msg;
        msg << "round " << r << " eps " << rep.epsilon << ": +" << rep.new_samples << " samples (" << rep.total_samples
            << " total), test loss " << rep.test_loss;
        st.say(msg.str());
        out.checkpoints.push_back(std::move(trained.params));
        out.rounds.push_back(std::move(rep));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalConfig {
    double v_max = 4.0;
    int trials = 5;
    std::uint64_t seed = 1;
    double duration = 150.0;  ///< s per trial; five loops at 4 m/s need about a minute
    int loops = 5;
    NavMode mode = NavMode::nav_direction;
};

struct TrialResult {
    int trial = 0;
    int gates_passed = 0;
    int total_gates = 0;
    int loops = 0;
    bool crashed = false;
    CrashCause cause = CrashCause::none;
    double t_end = 0.0;
    double completion = 0.0;  ///< percent
};

struct EvalReport {
    std::vector<TrialResult> trials;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation

    std::string csv() const;
};

inline const char* to_string(CrashCause c)
{
    switch (c) {
    case CrashCause::none: return "none";
    case CrashCause::frame: return "frame";
    case CrashCause::floor: return "floor";
    case CrashCause::bounds: return "bounds";
    }
    return "?";
}

inline std::string EvalReport::csv() const
{
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(3);
    o << "trial,gates_passed,total_gates,loops,crashed,cause,t_end,completion\n";
    for (const auto& t : trials)
        o << t.trial << ',' << t.gates_passed << ',' << t.total_gates << ',' << t.loops << ',' << (t.crashed ? 1 : 0) << ','
          << to_string(t.cause) << ',' << t.t_end << ',' << t.completion << '\n';
    o << "summary,,,,,,mean=" << mean << ",std=" << std << '\n';
    return o.str();
}

/// Fills mean and population std of the per-trial completion rates.
inline void summarize(EvalReport& rep)
{
    if (rep.trials.empty()) throw Error("eval report: no trials");
    double sum = 0.0, sq = 0.0;
    for (const auto& t : rep.trials) sum += t.completion;
    rep.mean = sum / static_cast<double>(rep.trials.size());
    for (const auto& t : rep.trials) sq += (t.completion - rep.mean) * (t.completion - rep.mean);
    rep.std = std::sqrt(sq / static_cast<double>(rep.trials.size()));
}

/// Held-out appearance for an evaluation trial: test-family textures, nominal lighting.
inline World eval_world(const World& track, double v_max, std::uint64_t seed)
{
    World w = track;
    Rng rng(seed);
    const std::uint32_t base = texture_seed_base(TextureFamily::test);
    w.floor_texture = base + static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));
    w.wall_texture = base + static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));
    for (auto& g : w.gates) g.texture_seed = base + static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));
    w.illumination = 1.0;
    w.v_max = v_max;
    return w;
}

/// Closed-loop trials on a fixed track. `params` null flies the expert.
inline EvalReport evaluate(const World& track, const NetParams<float>* params, const EvalConfig& cfg, const Settings& st_in)
{
    if (cfg.trials < 1) throw Error("evaluate: trials must be >= 1");
    Settings st = st_in;
    st.pilot.mode = cfg.mode;
    std::shared_ptr<const NetParams<float>> net;
    if (params) net = std::make_shared<const NetParams<float>>(*params);
    EvalReport rep;
    for (int i = 0; i < cfg.trials; ++i) {
        const World w = eval_world(track, cfg.v_max, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        const auto ref = global_reference(w);
        std::shared_ptr<Policy> policy;
        if (net)
            policy = std::make_shared<NetworkPolicy>(net);
        else
            policy = std::make_shared<ExpertPolicy>(ref, st.expert, st.camera, w.v_max);
        const auto r = run_episode(w, ref, *policy, st, {cfg.duration, cfg.loops, 0.0});
        TrialResult t;
        t.trial = i;
        t.gates_passed = r.gates_passed;
        t.total_gates = r.total_gates;
        t.loops = r.loops(static_cast<int>(w.gates.size()));
        t.crashed = r.crashed;
        t.cause = r.cause;
        t.t_end = r.t_end;
        t.completion = completion_rate(r.gates_passed, r.total_gates);
        rep.trials.push_back(t);
    }
    summarize(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Randomization ablation

inline const std::vector<std::string>& default_ablation_factors()
{
    static const std::vector<std::string> f{"v_max", "illumination", "gate_shape", "gate_texture"};
    return f;
}

struct AblationRow {
    std::string factor;  ///< "none" for the fully randomized reference
    double rmse = 0.0;
    std::size_t samples = 0;
};

inline void check_ablation_factor(const std::string& f)
{
    if (f == "gate_position" || f == "direction")
        throw Error("ablation: '" + f + "' cannot be disabled (policies trained without it do not pass a single gate)");
    RandomizationSpec probe;
    (void)randomization_flag(probe, f);
}

/// Runs the full schedule once per disabled factor, plus once with everything
/// randomized, and scores each final network's (x, v) RMSE on one test set.
inline std::vector<AblationRow> ablate(const std::vector<std::string>& factors, const ScheduleConfig& base,
                                       const Settings& st)
{
    for (const auto& f : factors) check_ablation_factor(f);
    const Dataset test = held_out_set(base, st);
    std::vector<AblationRow> rows;
    std::vector<std::string> runs{"none"};
    runs.insert(runs.end(), factors.begin(), factors.end());
    for (const auto& f : runs) {
        ScheduleConfig cfg = base;
        cfg.out_dir.clear();
        if (f != "none") randomization_flag(cfg.collect.rand_spec, f) = false;
        st.say("ablation run: " + f);
        const auto res = run_schedule(cfg, st, &test);
        rows.push_back({f, rmse_xv(test, res.final_params()), res.rounds.back().total_samples});
    }
    return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows)
{
    std::ostringstream o;
    o.precision(6);
    o << "disabled_factor,rmse_xv,train_samples\n";
    for (const auto& r : rows) o << r.factor << ',' << r.rmse << ',' << r.samples << '\n';
    return o.str();
}

}  // namespace drnav
