#ifndef AUSCULT_DDPM_HPP
#define AUSCULT_DDPM_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "signal.hpp"

namespace auscult {

// beta_t per step, alpha_t = 1 - beta_t, alpha_bar_t the running product,
// and the posterior variance beta~_t.  Index 0 of each vector is step t = 1.
struct NoiseSchedule {
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
    std::vector<double> beta_tildes;

    size_t T() const { return betas.size(); }
    // alpha_bar_0 = 1 by convention; t is 1-based.
    double alpha_bar(size_t t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
};

NoiseSchedule schedule_from_betas(std::vector<double> betas);
NoiseSchedule linear_schedule(size_t T, double beta_min, double beta_max);

// Training presets and the short inference schedule.
NoiseSchedule diffwave_schedule();  // T = 50,  beta 1e-4 .. 5e-2
NoiseSchedule wavegrad_schedule();  // T = 1000, beta 1e-6 .. 1e-2
const std::vector<double>& fast_inference_betas(); // {1e-4,1e-3,1e-2,5e-2,2e-1,5e-1}

// y_t = sqrt(alpha_bar_t) y0 + sqrt(1 - alpha_bar_t) eps
std::vector<double> forward_diffuse(std::span<const double> y0, size_t t,
                                    std::span<const double> eps, const NoiseSchedule& sched);

enum class LossNorm { l1, l2 };

double epsilon_loss(std::span<const double> pred, std::span<const double> target, LossNorm norm);

// Continuous level for WaveGrad-style conditioning: pick t uniformly, then a
// uniform sqrt(alpha_bar) inside [sqrt(ab_t), sqrt(ab_{t-1})].
double sample_noise_level_continuous(const NoiseSchedule& sched, RandomStream& rng);

// Ancestral sampler.  The callback receives the current y, the 1-based step,
// and sqrt(alpha_bar_t); it returns the epsilon estimate.  z is fresh noise
// with sigma_t = sqrt(beta~_t); the t = 1 step adds none.
using DenoiserFn = std::function<std::vector<double>(const std::vector<double>& y, size_t t,
                                                     double sqrt_alpha_bar)>;

struct SampleOptions {
    bool stochastic = true;
};

std::vector<double> reverse_sample(const DenoiserFn& denoise, const NoiseSchedule& sched,
                                   size_t length, RandomStream& rng,
                                   const SampleOptions& opts = {});

// ---------------------------------------------------------------------------
// Toy conditional denoiser: 1x1 input conv to 32 channels, four dilated
// residual conv layers (kernel 3, dilations 1/2/4/8) with tanh units, a shared
// mel-conditioner projection added at every layer, per-layer FiLM driven by a
// 32-dim sinusoidal noise embedding plus a learned label embedding, and a
// zero-initialized 1x1 output conv.  All math in double; checkpoints store
// float32.

enum class Conditioning { discrete_t, continuous_level };

struct DenoiserConfig {
    size_t channels = 32;
    size_t n_layers = 4;
    size_t kernel = 3;
    size_t embed_dim = 32;
    size_t n_mels = 80;
    size_t n_labels = 3;
    size_t cond_hop = 256; // mel frames repeat over this many samples
    Conditioning conditioning = Conditioning::discrete_t;
    std::string preset = "diffwave";
};

struct TensorInfo {
    std::string name;
    std::vector<size_t> shape;
    size_t offset = 0;
    size_t count = 0;
};

// Mel conditioner view: log-compressed frames, row-major [frame][mel].
struct CondFrames {
    const double* data = nullptr;
    size_t frames = 0;
    size_t n_mels = 0;
    double at(size_t f, size_t m) const { return data[f * n_mels + m]; }
};

struct TrainItem {
    std::vector<double> noisy;  // y_t
    std::vector<double> eps;    // target
    std::vector<double> cond;   // [frame][mel], log-compressed
    size_t cond_frames = 0;
    double pos = 0.0;           // embedding position: t or level * kLevelScale
    int label = 0;
};

class ToyDenoiser {
public:
    ToyDenoiser(const DenoiserConfig& cfg, RandomStream init_rng);
    // For checkpoint loading: parameters supplied verbatim.
    ToyDenoiser(const DenoiserConfig& cfg, std::vector<double> params);

    const DenoiserConfig& config() const { return cfg_; }
    const std::vector<TensorInfo>& tensors() const { return tensors_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::vector<double> predict(std::span<const double> y, const CondFrames& cond, double pos,
                                int label) const;

    // Mean loss over the batch; adds parameter gradients into grad (which
    // must be params().size() long).
    double batch_grad(const std::vector<TrainItem>& batch, LossNorm norm,
                      std::vector<double>& grad) const;
    double batch_loss(const std::vector<TrainItem>& batch, LossNorm norm) const;

    // Embedding position for a schedule step under this conditioning.
    double position_for(size_t t, const NoiseSchedule& sched) const;

    static constexpr double kLevelScale = 5000.0;

private:
    struct Workspace;
    void item_forward(const TrainItem& item, Workspace& ws) const;

    DenoiserConfig cfg_;
    std::vector<TensorInfo> tensors_;
    std::vector<double> params_;

    size_t idx(const char* name) const;
    void build_registry(); // fills tensors_, sizes params_
};

struct Adam {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    size_t t = 0;
    std::vector<double> m, v;

    void step(std::vector<double>& params, const std::vector<double>& grad);
};

// Central finite differences at relative step 1e-4 over a random sample of
// parameters.  loss() must evaluate the objective at the current params;
// analytic_grad must be the full gradient at the same point.
struct GradCheckResult {
    double max_rel_error = 0.0;
    size_t checked = 0;
};

GradCheckResult gradient_check(std::vector<double>& params,
                               const std::vector<double>& analytic_grad,
                               const std::function<double()>& loss, RandomStream& rng,
                               size_t n_probe = 100, double rel_step = 1e-4);

// ---------------------------------------------------------------------------
// Training

struct TrainRecord {
    Signal pcg;                     // 4 kHz, bandpassed, normalized
    Signal ecg;                     // 4 kHz, bandpassed, normalized
    std::vector<size_t> boundaries; // cycle boundaries at 4 kHz
    int label = 0;
};

struct TrainConfig {
    std::string preset = "diffwave"; // "diffwave" or "wavegrad"
    size_t steps = 2000;
    size_t batch_size = 8;
    size_t segment_len = 512;        // multiple of 256
    size_t eval_every = 50;
    double lr = 2e-4;
    LossNorm norm = LossNorm::l1;
    double rearrange_probability = 0.75;
    double early_stop_fraction = 0.0; // stop once val <= fraction * initial; 0 disables
};

struct TrainStats {
    double initial_val = 0.0;
    double best_val = 0.0;
    size_t steps_run = 0;
    std::vector<double> val_history; // evaluated every eval_every steps
};

struct TrainedModel {
    ToyDenoiser model;
    NoiseSchedule schedule;
    TrainStats stats;
};

TrainedModel train_toy_denoiser(const std::vector<TrainRecord>& records, const TrainConfig& cfg,
                                RandomStream rng);

// log(1 + mel) frames for conditioning, row-major [frame][mel].
std::vector<double> cond_from_mel(const MelSpectrogram& mel);

// Generates a PCG estimate conditioned on a prepared 4 kHz ECG signal.
Signal sample_pcg(const ToyDenoiser& model, const NoiseSchedule& sched, const Signal& ecg_4k,
                  int label, RandomStream& rng, const SampleOptions& opts = {});

// ---------------------------------------------------------------------------
// Checkpoints: magic, u32 header length, JSON header, float32 LE payload.

void save_checkpoint(const std::string& path, const ToyDenoiser& model,
                     const NoiseSchedule& sched);

struct LoadedCheckpoint {
    ToyDenoiser model;
    NoiseSchedule schedule;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace auscult

#endif
