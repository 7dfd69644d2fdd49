#include "gsstyle/trainer.hpp"

#include "gsstyle/errors.hpp"
#include "gsstyle/ply.hpp"

#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gsstyle {

    namespace {

        bool all_finite(std::span<const double> v) noexcept {
            for (double x : v) {
                if (!std::isfinite(x)) {
                    return false;
                }
            }
            return true;
        }

        void adam_update(std::span<double> params, std::span<const double> grad, std::vector<double>& m,
                         std::vector<double>& v, double lr, const AdamConfig& cfg, double bc1, double bc2) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                params[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
            }
        }

        void write_text(const std::filesystem::path& path, const std::string& text) {
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw IoError(fmt::format("cannot write {}", path.string()));
            }
            out << text;
            if (!out) {
                throw IoError(fmt::format("write failed for {}", path.string()));
            }
        }

        StepRecord make_record(const StepPlan& plan, const CompositeResult& c) {
            StepRecord s;
            s.step = plan.step;
            s.phase = plan.phase;
            s.rgb_overlay = plan.rgb_overlay;
            s.view = plan.view;
            s.alpha = plan.guidance.alpha;
            s.timestep = plan.guidance.timestep;
            s.delta_lambda = plan.guidance.delta_lambda;
            s.total = c.total;
            s.style = c.style;
            s.dssd = c.dssd;
            s.rgb = c.rgb;
            s.mask = c.mask;
            s.sos = c.sos;
            s.csd = c.csd;
            s.qa = c.qa;
            s.grad_norm = c.gradient.color_norm();
            return s;
        }

    } // namespace

    AdamState AdamState::for_cloud(const GaussianCloud& cloud) {
        AdamState s;
        s.m_dc.assign(cloud.sh_dc.size(), 0.0);
        s.v_dc.assign(cloud.sh_dc.size(), 0.0);
        s.m_rest.assign(cloud.sh_rest.size(), 0.0);
        s.v_rest.assign(cloud.sh_rest.size(), 0.0);
        return s;
    }

    void AdamState::step(GaussianCloud& cloud, const CloudGradient& grad, const AdamConfig& cfg, bool train_rest) {
        if (m_dc.size() != cloud.sh_dc.size() || m_rest.size() != cloud.sh_rest.size() ||
            grad.sh_dc.size() != cloud.sh_dc.size() || grad.sh_rest.size() != cloud.sh_rest.size()) {
            throw ArgumentError("optimizer state does not match the cloud");
        }
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        adam_update(cloud.sh_dc, grad.sh_dc, m_dc, v_dc, cfg.lr_dc, cfg, bc1, bc2);
        if (train_rest) {
            adam_update(cloud.sh_rest, grad.sh_rest, m_rest, v_rest, cfg.lr_rest, cfg, bc1, bc2);
        }
    }

    std::vector<double> oscillation_metric(const RunRecord& record) {
        std::vector<double> d;
        for (std::size_t i = 1; i < record.steps.size(); ++i) {
            d.push_back(std::abs(record.steps[i].grad_norm - record.steps[i - 1].grad_norm));
        }
        return d;
    }

    void write_checkpoint(const Checkpoint& cp, const std::filesystem::path& dir, const std::string& stem) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw IoError(fmt::format("cannot create checkpoint directory {}: {}", dir.string(), ec.message()));
        }
        save_ply(cp.cloud, dir / (stem + ".ply"));
        nlohmann::json j;
        j["step"] = cp.step;
        j["seed"] = cp.seed;
        // Exact colors: the PLY holds float32, resuming needs the doubles.
        j["sh_dc"] = cp.cloud.sh_dc;
        j["sh_rest"] = cp.cloud.sh_rest;
        j["adam"] = {{"t", cp.adam.t},
                     {"m_dc", cp.adam.m_dc},
                     {"v_dc", cp.adam.v_dc},
                     {"m_rest", cp.adam.m_rest},
                     {"v_rest", cp.adam.v_rest}};
        write_text(dir / (stem + ".json"), j.dump() + "\n");
    }

    Checkpoint read_checkpoint(const std::filesystem::path& dir, const std::string& stem) {
        Checkpoint cp;
        cp.cloud = load_ply(dir / (stem + ".ply"));
        const auto side = dir / (stem + ".json");
        std::ifstream in(side);
        if (!in) {
            throw IoError(fmt::format("cannot read {}", side.string()));
        }
        try {
            const auto j = nlohmann::json::parse(in);
            cp.step = j.at("step").get<std::int64_t>();
            cp.seed = j.at("seed").get<std::uint64_t>();
            auto dc = j.at("sh_dc").get<std::vector<double>>();
            auto rest = j.at("sh_rest").get<std::vector<double>>();
            if (dc.size() != cp.cloud.sh_dc.size() || rest.size() != cp.cloud.sh_rest.size()) {
                throw IoError(fmt::format("{} does not match {}.ply", side.string(), stem));
            }
            cp.cloud.sh_dc = std::move(dc);
            cp.cloud.sh_rest = std::move(rest);
            const auto& a = j.at("adam");
            cp.adam.t = a.at("t").get<std::int64_t>();
            cp.adam.m_dc = a.at("m_dc").get<std::vector<double>>();
            cp.adam.v_dc = a.at("v_dc").get<std::vector<double>>();
            cp.adam.m_rest = a.at("m_rest").get<std::vector<double>>();
            cp.adam.v_rest = a.at("v_rest").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError(fmt::format("malformed checkpoint sidecar {}: {}", side.string(), e.what()));
        }
        return cp;
    }

    StylizeResult stylize(const GaussianCloud& cloud, std::span<const CameraView> views, const StyleBundle& bundle,
                          const ProviderSet& providers, const TrainerConfig& config, const Checkpoint* resume) {
        config.objective.weights.validate();
        // a disabled expert's settings are never read
        if (config.objective.weights.lambda_sos > 0.0) {
            config.objective.sos.validate();
        }
        if (config.objective.weights.lambda_qa > 0.0) {
            config.objective.qa.validate();
        }
        if (views.empty()) {
            throw ArgumentError("stylize needs at least one camera view");
        }
        cloud.validate();

        StylizeResult res;
        res.cloud = cloud;
        res.adam = AdamState::for_cloud(cloud);
        res.record.seed = config.objective.seed;
        std::int64_t first = 0;
        if (resume != nullptr) {
            if (resume->cloud.size() != cloud.size() || resume->cloud.sh_degree != cloud.sh_degree) {
                throw ArgumentError("checkpoint does not match the scene");
            }
            res.cloud.sh_dc = resume->cloud.sh_dc;
            res.cloud.sh_rest = resume->cloud.sh_rest;
            res.adam = resume->adam;
            first = resume->step + 1;
        }

        const Scheduler scheduler(config.timetable, config.objective.weights.dssd.schedule,
                                  view_order(views, config.start_view), config.n_opt, config.objective.seed);

        for (std::int64_t i = first; i < config.timetable.total_steps(); ++i) {
            const StepPlan plan = scheduler.plan(i);
            const bool pretraining = i < config.objective.sos.pretrain_iterations;
            CompositeResult c =
                composite_loss(res.cloud, views, bundle, config.objective, providers, plan, pretraining);
            if (!config.train_sh_rest) {
                std::fill(c.gradient.sh_rest.begin(), c.gradient.sh_rest.end(), 0.0);
            }

            StepRecord rec = make_record(plan, c);
            if (!std::isfinite(c.total) || !all_finite(c.gradient.sh_dc) || !all_finite(c.gradient.sh_rest)) {
                if (!config.checkpoint_dir.empty()) {
                    write_checkpoint({i - 1, config.objective.seed, res.cloud, res.adam}, config.checkpoint_dir,
                                     "nonfinite");
                }
                throw NonFiniteLossError(
                    i, fmt::format("non-finite loss at step {} (phase {}, view {}, t={}): total={} dssd={} sos={} "
                                   "csd={} qa={}",
                                   i, phase_name(plan.phase), plan.view, plan.guidance.timestep, c.total, c.dssd,
                                   c.sos, c.csd, c.qa));
            }

            res.adam.step(res.cloud, c.gradient, config.adam, config.train_sh_rest);
            res.record.steps.push_back(rec);
            if (config.on_step) {
                config.on_step(rec, res.cloud);
            }
            if (config.checkpoint_every > 0 && (i + 1) % config.checkpoint_every == 0 && !config.checkpoint_dir.empty()) {
                write_checkpoint({i, config.objective.seed, res.cloud, res.adam}, config.checkpoint_dir,
                                 fmt::format("step_{:06d}", i + 1));
                res.record.checkpoints.push_back(i + 1);
            }
        }
        return res;
    }

} // namespace gsstyle
