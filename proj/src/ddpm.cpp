#include "ddpm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "cycles.hpp"
#include "errors.hpp"

namespace auscult {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

NoiseSchedule schedule_from_betas(std::vector<double> betas) {
    if (betas.empty()) fail(Errc::invalid_argument, "schedule: empty beta list");
    for (double b : betas)
        if (!(b > 0.0) || !(b < 1.0))
            fail(Errc::invalid_argument, "schedule: betas must lie in (0, 1)");

    NoiseSchedule s;
    s.betas = std::move(betas);
    s.alphas.resize(s.betas.size());
    s.alpha_bars.resize(s.betas.size());
    s.beta_tildes.resize(s.betas.size());
    double prod = 1.0;
    for (size_t i = 0; i < s.betas.size(); ++i) {
        s.alphas[i] = 1.0 - s.betas[i];
        prod *= s.alphas[i];
        s.alpha_bars[i] = prod;
    }
    s.beta_tildes[0] = s.betas[0];
    for (size_t i = 1; i < s.betas.size(); ++i)
        s.beta_tildes[i] =
            (1.0 - s.alpha_bars[i - 1]) / (1.0 - s.alpha_bars[i]) * s.betas[i];
    return s;
}

NoiseSchedule linear_schedule(size_t T, double beta_min, double beta_max) {
    if (T == 0) fail(Errc::invalid_argument, "schedule: T must be positive");
    std::vector<double> betas(T);
    for (size_t t = 0; t < T; ++t)
        betas[t] = T == 1 ? beta_min
                          : beta_min + (beta_max - beta_min) * static_cast<double>(t) /
                                           static_cast<double>(T - 1);
    return schedule_from_betas(std::move(betas));
}

NoiseSchedule diffwave_schedule() { return linear_schedule(50, 1e-4, 5e-2); }
NoiseSchedule wavegrad_schedule() { return linear_schedule(1000, 1e-6, 1e-2); }

const std::vector<double>& fast_inference_betas() {
    static const std::vector<double> betas{1e-4, 1e-3, 1e-2, 5e-2, 2e-1, 5e-1};
    return betas;
}

std::vector<double> forward_diffuse(std::span<const double> y0, size_t t,
                                    std::span<const double> eps, const NoiseSchedule& sched) {
    if (t == 0 || t > sched.T()) fail(Errc::invalid_argument, "forward_diffuse: t out of range");
    if (y0.size() != eps.size())
        fail(Errc::invalid_argument, "forward_diffuse: shape mismatch");
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    std::vector<double> out(y0.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * y0[i] + b * eps[i];
    return out;
}

double epsilon_loss(std::span<const double> pred, std::span<const double> target, LossNorm norm) {
    if (pred.size() != target.size() || pred.empty())
        fail(Errc::invalid_argument, "epsilon_loss: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += norm == LossNorm::l1 ? std::fabs(d) : d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double sample_noise_level_continuous(const NoiseSchedule& sched, RandomStream& rng) {
    const size_t t = static_cast<size_t>(rng.randint(1, static_cast<int64_t>(sched.T())));
    const double hi = std::sqrt(sched.alpha_bar(t - 1));
    const double lo = std::sqrt(sched.alpha_bar(t));
    return rng.uniform(lo, hi);
}

std::vector<double> reverse_sample(const DenoiserFn& denoise, const NoiseSchedule& sched,
                                   size_t length, RandomStream& rng,
                                   const SampleOptions& opts) {
    if (length == 0) fail(Errc::invalid_argument, "reverse_sample: empty length");
    std::vector<double> y = rng.gaussian_vector(length, 0.0, 1.0);
    for (size_t t = sched.T(); t >= 1; --t) {
        const double ab = sched.alpha_bar(t);
        const double alpha = sched.alphas[t - 1];
        const double beta = sched.betas[t - 1];
        const std::vector<double> eps_hat = denoise(y, t, std::sqrt(ab));
        if (eps_hat.size() != length)
            fail(Errc::invalid_argument, "reverse_sample: denoiser output shape mismatch");
        const double coef = beta / std::sqrt(1.0 - ab);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        for (size_t i = 0; i < length; ++i) y[i] = inv_sqrt_alpha * (y[i] - coef * eps_hat[i]);
        if (t > 1 && opts.stochastic) {
            const double sigma = std::sqrt(sched.beta_tildes[t - 1]);
            const std::vector<double> z = rng.gaussian_vector(length, 0.0, 1.0);
            for (size_t i = 0; i < length; ++i) y[i] += sigma * z[i];
        }
    }
    return y;
}

// ---------------------------------------------------------------------------
// ToyDenoiser

namespace {

std::vector<double> sinusoidal_embedding(double pos, size_t dim) {
    std::vector<double> e(dim);
    const size_t half = dim / 2;
    for (size_t i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
        e[i] = std::sin(pos * freq);
        e[half + i] = std::cos(pos * freq);
    }
    return e;
}

} // namespace

size_t ToyDenoiser::idx(const char* name) const {
    for (size_t i = 0; i < tensors_.size(); ++i)
        if (tensors_[i].name == name) return i;
    fail(Errc::internal, std::string("unknown tensor ") + name);
}

void ToyDenoiser::build_registry() {
    tensors_.clear();
    const size_t C = cfg_.channels, K = cfg_.kernel, E = cfg_.embed_dim, M = cfg_.n_mels;
    auto add = [&](std::string name, std::vector<size_t> shape) {
        TensorInfo t;
        t.name = std::move(name);
        t.shape = std::move(shape);
        t.count = 1;
        for (size_t s : t.shape) t.count *= s;
        t.offset = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().count;
        tensors_.push_back(std::move(t));
    };
    add("conv_in.w", {C});
    add("conv_in.b", {C});
    for (size_t l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        add(p + ".w", {C, C, K});
        add(p + ".b", {C});
        add(p + ".film_scale.w", {C, E});
        add(p + ".film_scale.b", {C});
        add(p + ".film_shift.w", {C, E});
        add(p + ".film_shift.b", {C});
    }
    add("cond.w", {C, M});
    add("cond.b", {C});
    add("label.emb", {cfg_.n_labels, E});
    add("conv_out.w", {C});
    add("conv_out.b", {1});
    params_.assign(tensors_.back().offset + tensors_.back().count, 0.0);
}

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg, RandomStream init_rng) : cfg_(cfg) {
    if (cfg_.kernel % 2 == 0) fail(Errc::invalid_argument, "denoiser: kernel must be odd");
    build_registry();
    for (const TensorInfo& t : tensors_) {
        double s = 0.0;
        if (t.name == "conv_in.w")
            s = 0.5;
        else if (t.name.find(".w") != std::string::npos && t.name.rfind("layer", 0) == 0 &&
                 t.name.find("film") == std::string::npos)
            s = std::sqrt(6.0 / static_cast<double>(cfg_.channels * cfg_.kernel + cfg_.channels));
        else if (t.name.find("film") != std::string::npos &&
                 t.name.find(".w") != std::string::npos)
            s = 0.01;
        else if (t.name == "cond.w")
            s = 0.05;
        else if (t.name == "label.emb")
            s = 0.01;
        // conv_out and all biases stay zero.
        if (s > 0.0) {
            double* p = params_.data() + t.offset;
            for (size_t i = 0; i < t.count; ++i) p[i] = init_rng.uniform(-s, s);
        }
    }
}

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg, std::vector<double> params) : cfg_(cfg) {
    build_registry();
    if (params.size() != params_.size())
        fail(Errc::format, "denoiser: parameter count does not match the configuration");
    params_ = std::move(params);
}

double ToyDenoiser::position_for(size_t t, const NoiseSchedule& sched) const {
    if (cfg_.conditioning == Conditioning::discrete_t) return static_cast<double>(t);
    return std::sqrt(sched.alpha_bar(t)) * kLevelScale;
}

struct ToyDenoiser::Workspace {
    size_t L = 0;
    std::vector<double> x;     // (n_layers + 1) planes of C*L
    std::vector<double> h;     // n_layers planes of C*L
    std::vector<double> cadd;  // C*L
    std::vector<double> gamma; // n_layers * C
    std::vector<double> beta;  // n_layers * C
    std::vector<double> m;     // E
    std::vector<double> out;   // L

    std::vector<double> dxa, dxb, du; // C*L scratch
    std::vector<double> dcadd;        // C*L
    std::vector<double> dm;           // E

    void resize(const DenoiserConfig& cfg, size_t len) {
        L = len;
        const size_t plane = cfg.channels * len;
        x.resize((cfg.n_layers + 1) * plane);
        h.resize(cfg.n_layers * plane);
        cadd.resize(plane);
        gamma.resize(cfg.n_layers * cfg.channels);
        beta.resize(cfg.n_layers * cfg.channels);
        m.resize(cfg.embed_dim);
        out.resize(len);
        dxa.resize(plane);
        dxb.resize(plane);
        du.resize(plane);
        dcadd.resize(plane);
        dm.resize(cfg.embed_dim);
    }
};

namespace {

// u[c][.] += dilated conv of x with W[c][c'][k]; kernel 3 hardcoded layout,
// general odd kernels supported.
void conv_forward(const double* W, const double* b, const double* x, double* u, size_t C,
                  size_t K, size_t d, size_t L) {
    const long long half = static_cast<long long>(K / 2);
    for (size_t c = 0; c < C; ++c) {
        double* dst = u + c * L;
        const double bias = b[c];
        for (size_t t = 0; t < L; ++t) dst[t] += bias;
        for (size_t cp = 0; cp < C; ++cp) {
            const double* src = x + cp * L;
            const double* w = W + (c * C + cp) * K;
            for (long long k = -half; k <= half; ++k) {
                const double wk = w[k + half];
                if (wk == 0.0) continue;
                const long long off = k * static_cast<long long>(d);
                const size_t t0 = off < 0 ? static_cast<size_t>(-off) : 0;
                const size_t t1 = off > 0 ? L - static_cast<size_t>(off) : L;
                const double* s = src + off;
                for (size_t t = t0; t < t1; ++t) dst[t] += wk * s[t];
            }
        }
    }
}

// dX[c'][.] += W^T applied to dU.
void conv_backward_data(const double* W, const double* dU, double* dX, size_t C, size_t K,
                        size_t d, size_t L) {
    const long long half = static_cast<long long>(K / 2);
    for (size_t c = 0; c < C; ++c) {
        const double* dsrc = dU + c * L;
        for (size_t cp = 0; cp < C; ++cp) {
            double* dst = dX + cp * L;
            const double* w = W + (c * C + cp) * K;
            for (long long k = -half; k <= half; ++k) {
                const double wk = w[k + half];
                if (wk == 0.0) continue;
                // u[t] += wk * x[t + k*d]  =>  dX[s] += wk * dU[s - k*d]
                const long long off = -k * static_cast<long long>(d);
                const size_t t0 = off < 0 ? static_cast<size_t>(-off) : 0;
                const size_t t1 = off > 0 ? L - static_cast<size_t>(off) : L;
                const double* s = dsrc + off;
                for (size_t t = t0; t < t1; ++t) dst[t] += wk * s[t];
            }
        }
    }
}

void conv_backward_weights(double* dW, double* db, const double* dU, const double* x, size_t C,
                           size_t K, size_t d, size_t L) {
    const long long half = static_cast<long long>(K / 2);
    for (size_t c = 0; c < C; ++c) {
        const double* dsrc = dU + c * L;
        double acc_b = 0.0;
        for (size_t t = 0; t < L; ++t) acc_b += dsrc[t];
        db[c] += acc_b;
        for (size_t cp = 0; cp < C; ++cp) {
            const double* src = x + cp * L;
            double* w = dW + (c * C + cp) * K;
            for (long long k = -half; k <= half; ++k) {
                const long long off = k * static_cast<long long>(d);
                const size_t t0 = off < 0 ? static_cast<size_t>(-off) : 0;
                const size_t t1 = off > 0 ? L - static_cast<size_t>(off) : L;
                const double* s = src + off;
                double acc = 0.0;
                for (size_t t = t0; t < t1; ++t) acc += dsrc[t] * s[t];
                w[k + half] += acc;
            }
        }
    }
}

} // namespace

void ToyDenoiser::item_forward(const TrainItem& item, Workspace& ws) const {
    const size_t C = cfg_.channels, K = cfg_.kernel, E = cfg_.embed_dim, M = cfg_.n_mels;
    const size_t L = item.noisy.size();
    if (item.cond_frames == 0 || item.cond.size() != item.cond_frames * M)
        fail(Errc::invalid_argument, "denoiser: conditioner shape mismatch");
    if (item.label < 0 || static_cast<size_t>(item.label) >= cfg_.n_labels)
        fail(Errc::invalid_argument, "denoiser: label out of range");
    ws.resize(cfg_, L);
    const size_t plane = C * L;
    const double* P = params_.data();

    const TensorInfo& t_wi = tensors_[idx("conv_in.w")];
    const TensorInfo& t_bi = tensors_[idx("conv_in.b")];
    const double* Wi = P + t_wi.offset;
    const double* Bi = P + t_bi.offset;
    for (size_t c = 0; c < C; ++c) {
        double* dst = ws.x.data() + c * L;
        const double w = Wi[c], b = Bi[c];
        for (size_t t = 0; t < L; ++t) dst[t] = w * item.noisy[t] + b;
    }

    // Shared conditioner projection, computed per mel frame then repeated.
    const double* Wc = P + tensors_[idx("cond.w")].offset;
    const double* Bc = P + tensors_[idx("cond.b")].offset;
    for (size_t c = 0; c < C; ++c) {
        double* dst = ws.cadd.data() + c * L;
        const double* wrow = Wc + c * M;
        for (size_t f = 0; f < item.cond_frames; ++f) {
            const double* frame = item.cond.data() + f * M;
            double acc = Bc[c];
            for (size_t m = 0; m < M; ++m) acc += wrow[m] * frame[m];
            const size_t t0 = f * cfg_.cond_hop;
            const size_t t1 = f + 1 == item.cond_frames ? L : std::min(L, t0 + cfg_.cond_hop);
            for (size_t t = t0; t < t1 && t < L; ++t) dst[t] = acc;
        }
    }

    // Noise embedding plus label embedding.
    const std::vector<double> se = sinusoidal_embedding(item.pos, E);
    const double* Le = P + tensors_[idx("label.emb")].offset +
                       static_cast<size_t>(item.label) * E;
    for (size_t i = 0; i < E; ++i) ws.m[i] = se[i] + Le[i];

    for (size_t l = 0; l < cfg_.n_layers; ++l) {
        const std::string pfx = "layer" + std::to_string(l);
        const double* W = P + tensors_[idx((pfx + ".w").c_str())].offset;
        const double* B = P + tensors_[idx((pfx + ".b").c_str())].offset;
        const double* Wg = P + tensors_[idx((pfx + ".film_scale.w").c_str())].offset;
        const double* Bg = P + tensors_[idx((pfx + ".film_scale.b").c_str())].offset;
        const double* Wb = P + tensors_[idx((pfx + ".film_shift.w").c_str())].offset;
        const double* Bb = P + tensors_[idx((pfx + ".film_shift.b").c_str())].offset;

        double* gamma = ws.gamma.data() + l * C;
        double* beta = ws.beta.data() + l * C;
        for (size_t c = 0; c < C; ++c) {
            double g = Bg[c], b = Bb[c];
            const double* wg = Wg + c * E;
            const double* wb = Wb + c * E;
            for (size_t i = 0; i < E; ++i) {
                g += wg[i] * ws.m[i];
                b += wb[i] * ws.m[i];
            }
            gamma[c] = g;
            beta[c] = b;
        }

        const double* x_l = ws.x.data() + l * plane;
        double* x_next = ws.x.data() + (l + 1) * plane;
        double* h = ws.h.data() + l * plane;

        // u accumulates in h's storage: bias + cond + conv.
        std::copy(ws.cadd.begin(), ws.cadd.end(), h);
        conv_forward(W, B, x_l, h, C, K, size_t{1} << l, L);
        for (size_t i = 0; i < plane; ++i) h[i] = std::tanh(h[i]);
        for (size_t c = 0; c < C; ++c) {
            const double g1 = 1.0 + gamma[c], bv = beta[c];
            const double* hs = h + c * L;
            const double* xs = x_l + c * L;
            double* xd = x_next + c * L;
            for (size_t t = 0; t < L; ++t) xd[t] = xs[t] + hs[t] * g1 + bv;
        }
    }

    const double* Wo = P + tensors_[idx("conv_out.w")].offset;
    const double bo = P[tensors_[idx("conv_out.b")].offset];
    const double* x_last = ws.x.data() + cfg_.n_layers * plane;
    std::fill(ws.out.begin(), ws.out.end(), bo);
    for (size_t c = 0; c < C; ++c) {
        const double w = Wo[c];
        const double* xs = x_last + c * L;
        for (size_t t = 0; t < L; ++t) ws.out[t] += w * xs[t];
    }
}

std::vector<double> ToyDenoiser::predict(std::span<const double> y, const CondFrames& cond,
                                         double pos, int label) const {
    TrainItem item;
    item.noisy.assign(y.begin(), y.end());
    item.eps.assign(y.size(), 0.0);
    item.cond.assign(cond.data, cond.data + cond.frames * cond.n_mels);
    item.cond_frames = cond.frames;
    item.pos = pos;
    item.label = label;
    Workspace ws;
    item_forward(item, ws);
    return ws.out;
}

double ToyDenoiser::batch_loss(const std::vector<TrainItem>& batch, LossNorm norm) const {
    if (batch.empty()) fail(Errc::invalid_argument, "batch_loss: empty batch");
    Workspace ws;
    double total = 0.0;
    size_t count = 0;
    for (const TrainItem& item : batch) {
        item_forward(item, ws);
        for (size_t t = 0; t < ws.L; ++t) {
            const double d = ws.out[t] - item.eps[t];
            total += norm == LossNorm::l1 ? std::fabs(d) : d * d;
        }
        count += ws.L;
    }
    return total / static_cast<double>(count);
}

double ToyDenoiser::batch_grad(const std::vector<TrainItem>& batch, LossNorm norm,
                               std::vector<double>& grad) const {
    if (batch.empty()) fail(Errc::invalid_argument, "batch_grad: empty batch");
    if (grad.size() != params_.size())
        fail(Errc::invalid_argument, "batch_grad: gradient buffer size mismatch");

    const size_t C = cfg_.channels, K = cfg_.kernel, E = cfg_.embed_dim, M = cfg_.n_mels;
    const double* P = params_.data();
    double* G = grad.data();

    size_t total_elems = 0;
    for (const TrainItem& item : batch) total_elems += item.noisy.size();

    Workspace ws;
    double total_loss = 0.0;
    for (const TrainItem& item : batch) {
        item_forward(item, ws);
        const size_t L = ws.L;
        const size_t plane = C * L;

        // dL/dout
        std::vector<double> dout(L);
        for (size_t t = 0; t < L; ++t) {
            const double d = ws.out[t] - item.eps[t];
            total_loss += norm == LossNorm::l1 ? std::fabs(d) : d * d;
            const double g = norm == LossNorm::l1 ? (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0))
                                                  : 2.0 * d;
            dout[t] = g / static_cast<double>(total_elems);
        }

        // Output conv.
        const double* Wo = P + tensors_[idx("conv_out.w")].offset;
        double* dWo = G + tensors_[idx("conv_out.w")].offset;
        double* dbo = G + tensors_[idx("conv_out.b")].offset;
        const double* x_last = ws.x.data() + cfg_.n_layers * plane;
        std::fill(ws.dxa.begin(), ws.dxa.end(), 0.0);
        double acc_bo = 0.0;
        for (size_t t = 0; t < L; ++t) acc_bo += dout[t];
        *dbo += acc_bo;
        for (size_t c = 0; c < C; ++c) {
            const double w = Wo[c];
            const double* xs = x_last + c * L;
            double* dx = ws.dxa.data() + c * L;
            double accw = 0.0;
            for (size_t t = 0; t < L; ++t) {
                accw += xs[t] * dout[t];
                dx[t] = w * dout[t];
            }
            dWo[c] += accw;
        }

        std::fill(ws.dcadd.begin(), ws.dcadd.end(), 0.0);
        std::fill(ws.dm.begin(), ws.dm.end(), 0.0);

        // dxa holds dL/dx_{l+1}; walk layers backwards.
        for (size_t l = cfg_.n_layers; l-- > 0;) {
            const std::string pfx = "layer" + std::to_string(l);
            const double* W = P + tensors_[idx((pfx + ".w").c_str())].offset;
            double* dW = G + tensors_[idx((pfx + ".w").c_str())].offset;
            double* dB = G + tensors_[idx((pfx + ".b").c_str())].offset;
            const double* Wg = P + tensors_[idx((pfx + ".film_scale.w").c_str())].offset;
            double* dWg = G + tensors_[idx((pfx + ".film_scale.w").c_str())].offset;
            double* dBg = G + tensors_[idx((pfx + ".film_scale.b").c_str())].offset;
            const double* Wb = P + tensors_[idx((pfx + ".film_shift.w").c_str())].offset;
            double* dWb = G + tensors_[idx((pfx + ".film_shift.w").c_str())].offset;
            double* dBb = G + tensors_[idx((pfx + ".film_shift.b").c_str())].offset;

            const double* x_l = ws.x.data() + l * plane;
            const double* h = ws.h.data() + l * plane;
            const double* gamma = ws.gamma.data() + l * C;

            // x_{l+1} = x_l + h (1 + gamma) + beta
            for (size_t c = 0; c < C; ++c) {
                const double* dxn = ws.dxa.data() + c * L;
                const double* hs = h + c * L;
                double dgamma = 0.0, dbeta = 0.0;
                double* duc = ws.du.data() + c * L;
                const double g1 = 1.0 + gamma[c];
                for (size_t t = 0; t < L; ++t) {
                    const double dx = dxn[t];
                    dgamma += dx * hs[t];
                    dbeta += dx;
                    const double dh = dx * g1;
                    duc[t] = dh * (1.0 - hs[t] * hs[t]);
                }
                // FiLM projections
                const double* wg = Wg + c * E;
                const double* wb = Wb + c * E;
                double* dwg = dWg + c * E;
                double* dwb = dWb + c * E;
                for (size_t i = 0; i < E; ++i) {
                    dwg[i] += dgamma * ws.m[i];
                    dwb[i] += dbeta * ws.m[i];
                    ws.dm[i] += wg[i] * dgamma + wb[i] * dbeta;
                }
                dBg[c] += dgamma;
                dBb[c] += dbeta;
            }

            // Residual path plus conv data gradient.
            std::copy(ws.dxa.begin(), ws.dxa.end(), ws.dxb.begin());
            conv_backward_data(W, ws.du.data(), ws.dxb.data(), C, K, size_t{1} << l, L);
            conv_backward_weights(dW, dB, ws.du.data(), x_l, C, K, size_t{1} << l, L);
            for (size_t i = 0; i < plane; ++i) ws.dcadd[i] += ws.du[i];
            std::swap(ws.dxa, ws.dxb);
        }

        // Input conv.
        double* dWi = G + tensors_[idx("conv_in.w")].offset;
        double* dBi = G + tensors_[idx("conv_in.b")].offset;
        for (size_t c = 0; c < C; ++c) {
            const double* dx = ws.dxa.data() + c * L;
            double accw = 0.0, accb = 0.0;
            for (size_t t = 0; t < L; ++t) {
                accw += dx[t] * item.noisy[t];
                accb += dx[t];
            }
            dWi[c] += accw;
            dBi[c] += accb;
        }

        // Conditioner projection: fold dcadd per frame block.
        double* dWc = G + tensors_[idx("cond.w")].offset;
        double* dBc = G + tensors_[idx("cond.b")].offset;
        for (size_t c = 0; c < C; ++c) {
            const double* dca = ws.dcadd.data() + c * L;
            double* dwrow = dWc + c * M;
            double accb = 0.0;
            for (size_t f = 0; f < item.cond_frames; ++f) {
                const size_t t0 = f * cfg_.cond_hop;
                const size_t t1 =
                    f + 1 == item.cond_frames ? L : std::min(L, t0 + cfg_.cond_hop);
                double block = 0.0;
                for (size_t t = t0; t < t1 && t < L; ++t) block += dca[t];
                accb += block;
                const double* frame = item.cond.data() + f * M;
                for (size_t m = 0; m < M; ++m) dwrow[m] += block * frame[m];
            }
            dBc[c] += accb;
        }

        // Label embedding (sinusoidal part has no parameters).
        double* dLe = G + tensors_[idx("label.emb")].offset +
                      static_cast<size_t>(item.label) * E;
        for (size_t i = 0; i < E; ++i) dLe[i] += ws.dm[i];
    }
    return total_loss / static_cast<double>(total_elems);
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (m.empty()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    if (params.size() != grad.size() || params.size() != m.size())
        fail(Errc::invalid_argument, "adam: size mismatch");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

GradCheckResult gradient_check(std::vector<double>& params,
                               const std::vector<double>& analytic_grad,
                               const std::function<double()>& loss, RandomStream& rng,
                               size_t n_probe, double rel_step) {
    if (analytic_grad.size() != params.size())
        fail(Errc::invalid_argument, "gradient_check: gradient size mismatch");
    GradCheckResult res;
    res.checked = std::min(n_probe, params.size());
    for (size_t i = 0; i < res.checked; ++i) {
        const size_t j = static_cast<size_t>(rng.choice(params.size()));
        const double saved = params[j];
        const double h = rel_step * std::max(1.0, std::fabs(saved));
        params[j] = saved + h;
        const double lp = loss();
        params[j] = saved - h;
        const double lm = loss();
        params[j] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = analytic_grad[j];
        if (std::fabs(fd) < 1e-12 && std::fabs(an) < 1e-12) continue;
        const double rel = std::fabs(an - fd) / std::max(std::fabs(fd), 1e-12);
        res.max_rel_error = std::max(res.max_rel_error, rel);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Training

std::vector<double> cond_from_mel(const MelSpectrogram& mel) {
    std::vector<double> cond(mel.bands.size());
    for (size_t i = 0; i < cond.size(); ++i) cond[i] = std::log1p(mel.bands[i]);
    return cond;
}

namespace {

constexpr size_t kMelWindow = 1024;
constexpr size_t kMelHop = 256;

bool cycles_spliceable(const TrainRecord& rec) {
    if (rec.boundaries.empty()) return false;
    size_t prev = 0;
    for (size_t b : rec.boundaries) {
        if (b - prev < kSpliceOverlap) return false;
        prev = b;
    }
    return rec.pcg.size() - prev >= kSpliceOverlap;
}

TrainItem make_item(const TrainRecord& rec, bool allow_rearrange, const TrainConfig& cfg,
                    const NoiseSchedule& sched, Conditioning mode, RandomStream& s) {
    const Signal* pcg = &rec.pcg;
    const Signal* ecg = &rec.ecg;
    Signal pcg_r, ecg_r;

    if (allow_rearrange && s.bernoulli(cfg.rearrange_probability)) {
        // One plan reorders both channels so the conditioner stays aligned.
        const auto mode_pick = static_cast<RearrangeMode>(s.choice(3));
        const RearrangePlan plan =
            draw_rearrange_plan(rec.boundaries.size() + 1, mode_pick, s);
        pcg_r = rearrange_with_plan(rec.pcg, rec.boundaries, plan).signal;
        ecg_r = rearrange_with_plan(rec.ecg, rec.boundaries, plan).signal;
        pcg = &pcg_r;
        ecg = &ecg_r;
    }

    const size_t seg = cfg.segment_len;
    const size_t ecg_span = seg + kMelWindow - kMelHop; // mel frames covering the crop
    const size_t usable = std::min(pcg->size(), ecg->size());
    if (usable < ecg_span)
        fail(Errc::invalid_argument, "train: record too short for the segment length");
    const size_t max_block = (usable - ecg_span) / kMelHop;
    const size_t off = kMelHop * static_cast<size_t>(s.randint(0, static_cast<int64_t>(max_block)));

    Signal ecg_slice;
    ecg_slice.sample_rate_hz = 4000.0;
    ecg_slice.samples.assign(ecg->samples.begin() + static_cast<long>(off),
                             ecg->samples.begin() + static_cast<long>(off + ecg_span));
    const MelSpectrogram mel = mel_spectrogram(ecg_slice, 80, kMelWindow, kMelHop);

    TrainItem item;
    item.cond = cond_from_mel(mel);
    item.cond_frames = mel.frames;
    item.label = rec.label;

    std::span<const double> y0(pcg->samples.data() + off, seg);
    item.eps = s.gaussian_vector(seg, 0.0, 1.0);

    size_t t;
    double ab;
    if (mode == Conditioning::discrete_t) {
        t = static_cast<size_t>(s.randint(1, static_cast<int64_t>(sched.T())));
        ab = sched.alpha_bar(t);
        item.pos = static_cast<double>(t);
    } else {
        const double level = sample_noise_level_continuous(sched, s);
        ab = level * level;
        item.pos = level * ToyDenoiser::kLevelScale;
        t = 0; // unused
    }
    (void)t;
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    item.noisy.resize(seg);
    for (size_t i = 0; i < seg; ++i) item.noisy[i] = a * y0[i] + b * item.eps[i];
    return item;
}

} // namespace

TrainedModel train_toy_denoiser(const std::vector<TrainRecord>& records, const TrainConfig& cfg,
                                RandomStream rng) {
    if (records.size() < 2) fail(Errc::invalid_argument, "train: need at least 2 records");
    if (cfg.segment_len == 0 || cfg.segment_len % kMelHop != 0)
        fail(Errc::invalid_argument, "train: segment_len must be a positive multiple of 256");
    if (cfg.preset != "diffwave" && cfg.preset != "wavegrad")
        fail(Errc::config, "train: unknown preset '" + cfg.preset + "'");

    const bool diffwave = cfg.preset == "diffwave";
    NoiseSchedule sched = diffwave ? diffwave_schedule() : wavegrad_schedule();
    const Conditioning mode =
        diffwave ? Conditioning::discrete_t : Conditioning::continuous_level;

    for (const TrainRecord& rec : records) {
        if (rec.pcg.sample_rate_hz != 4000.0 || rec.ecg.sample_rate_hz != 4000.0)
            fail(Errc::invalid_argument, "train: records must be at 4 kHz");
        if (std::min(rec.pcg.size(), rec.ecg.size()) < cfg.segment_len + kMelWindow - kMelHop)
            fail(Errc::invalid_argument, "train: record too short for the segment length");
    }

    std::vector<size_t> train_idx, val_idx;
    for (size_t i = 0; i < records.size(); ++i)
        (i % 8 == 7 ? val_idx : train_idx).push_back(i);
    if (val_idx.empty()) {
        val_idx.push_back(train_idx.back());
        train_idx.pop_back();
    }
    if (train_idx.empty()) fail(Errc::invalid_argument, "train: no training records left");

    DenoiserConfig dcfg;
    dcfg.conditioning = mode;
    dcfg.preset = cfg.preset;
    ToyDenoiser model(dcfg, rng.split("init"));

    // Frozen validation batch: fixed records, crops, levels, and noise.
    std::vector<TrainItem> val_items;
    {
        RandomStream vs = rng.split("val");
        for (size_t j = 0; j < cfg.batch_size; ++j) {
            RandomStream is = vs.split("item:" + std::to_string(j));
            const TrainRecord& rec = records[val_idx[j % val_idx.size()]];
            val_items.push_back(make_item(rec, false, cfg, sched, mode, is));
        }
    }

    TrainStats stats;
    stats.initial_val = model.batch_loss(val_items, cfg.norm);
    stats.best_val = stats.initial_val;
    std::vector<double> best_params = model.params();

    Adam opt;
    opt.lr = cfg.lr;
    std::vector<double> grad(model.params().size(), 0.0);

    for (size_t step = 1; step <= cfg.steps; ++step) {
        RandomStream ss = rng.split("step:" + std::to_string(step));
        std::vector<TrainItem> batch;
        batch.reserve(cfg.batch_size);
        for (size_t j = 0; j < cfg.batch_size; ++j) {
            RandomStream is = ss.split("item:" + std::to_string(j));
            const TrainRecord& rec = records[train_idx[is.choice(train_idx.size())]];
            batch.push_back(make_item(rec, cycles_spliceable(rec), cfg, sched, mode, is));
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        model.batch_grad(batch, cfg.norm, grad);
        opt.step(model.params(), grad);
        stats.steps_run = step;

        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const double val = model.batch_loss(val_items, cfg.norm);
            stats.val_history.push_back(val);
            if (val < stats.best_val) {
                stats.best_val = val;
                best_params = model.params();
            }
            if (cfg.early_stop_fraction > 0.0 &&
                val <= cfg.early_stop_fraction * stats.initial_val)
                break;
        }
    }

    model.params() = best_params;
    return TrainedModel{std::move(model), std::move(sched), std::move(stats)};
}

Signal sample_pcg(const ToyDenoiser& model, const NoiseSchedule& sched, const Signal& ecg_4k,
                  int label, RandomStream& rng, const SampleOptions& opts) {
    if (ecg_4k.sample_rate_hz != 4000.0)
        fail(Errc::invalid_argument, "sample_pcg: ECG must be at 4 kHz");
    const MelSpectrogram mel = mel_spectrogram(ecg_4k, model.config().n_mels);
    const std::vector<double> cond = cond_from_mel(mel);
    CondFrames cf{cond.data(), mel.frames, mel.n_mels};

    const DenoiserFn fn = [&](const std::vector<double>& y, size_t t, double) {
        return model.predict(y, cf, model.position_for(t, sched), label);
    };
    std::vector<double> out = reverse_sample(fn, sched, ecg_4k.size(), rng, opts);
    return Signal{std::move(out), 4000.0};
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kCkptMagic[8] = {'A', 'U', 'S', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const ToyDenoiser& model,
                     const NoiseSchedule& sched) {
    nlohmann::json header;
    header["format"] = 1;
    header["preset"] = model.config().preset;
    header["conditioning"] =
        model.config().conditioning == Conditioning::discrete_t ? "discrete_t"
                                                                : "continuous_level";
    header["channels"] = model.config().channels;
    header["n_layers"] = model.config().n_layers;
    header["kernel"] = model.config().kernel;
    header["embed_dim"] = model.config().embed_dim;
    header["n_mels"] = model.config().n_mels;
    header["n_labels"] = model.config().n_labels;
    header["cond_hop"] = model.config().cond_hop;
    header["labels"] = {"normal", "abnormal", "unsure"};
    header["mel"] = {{"variant", kMelVariant}, {"rate_hz", 4000},  {"window", 1024},
                     {"hop", 256},             {"n_mels", model.config().n_mels},
                     {"fmin_hz", 0.0},         {"fmax_hz", 2000.0}};
    header["schedule"] = {{"betas", sched.betas}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const TensorInfo& t : model.tensors())
        tensors.push_back({{"name", t.name}, {"shape", t.shape}});
    header["tensors"] = tensors;

    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io, "checkpoint: cannot open '" + path + "' for writing");
    f.write(kCkptMagic, sizeof(kCkptMagic));
    const uint32_t hlen = static_cast<uint32_t>(hs.size());
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    std::vector<float> payload(model.params().size());
    for (size_t i = 0; i < payload.size(); ++i)
        payload[i] = static_cast<float>(model.params()[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) fail(Errc::io, "checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Errc::io, "checkpoint: cannot open '" + path + "'");
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        fail(Errc::format, "checkpoint: bad magic");
    uint32_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!f || hlen == 0 || hlen > (1u << 24)) fail(Errc::format, "checkpoint: bad header length");
    std::string hs(hlen, '\0');
    f.read(hs.data(), hlen);
    if (!f) fail(Errc::format, "checkpoint: truncated header");

    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) fail(Errc::format, "checkpoint: header is not valid JSON");
    if (header.value("format", 0) != 1) fail(Errc::format, "checkpoint: unsupported format");

    DenoiserConfig cfg;
    cfg.channels = header.at("channels").get<size_t>();
    cfg.n_layers = header.at("n_layers").get<size_t>();
    cfg.kernel = header.at("kernel").get<size_t>();
    cfg.embed_dim = header.at("embed_dim").get<size_t>();
    cfg.n_mels = header.at("n_mels").get<size_t>();
    cfg.n_labels = header.at("n_labels").get<size_t>();
    cfg.cond_hop = header.at("cond_hop").get<size_t>();
    cfg.preset = header.at("preset").get<std::string>();
    const std::string cond = header.at("conditioning").get<std::string>();
    if (cond == "discrete_t")
        cfg.conditioning = Conditioning::discrete_t;
    else if (cond == "continuous_level")
        cfg.conditioning = Conditioning::continuous_level;
    else
        fail(Errc::format, "checkpoint: unknown conditioning '" + cond + "'");

    NoiseSchedule sched =
        schedule_from_betas(header.at("schedule").at("betas").get<std::vector<double>>());

    ToyDenoiser model(cfg, RandomStream(0)); // registry sizing; payload overwrites
    std::vector<float> payload(model.params().size());
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) fail(Errc::format, "checkpoint: truncated payload");
    char extra;
    if (f.read(&extra, 1)) fail(Errc::format, "checkpoint: trailing bytes");

    for (size_t i = 0; i < payload.size(); ++i)
        model.params()[i] = static_cast<double>(payload[i]);
    return LoadedCheckpoint{std::move(model), std::move(sched)};
}

} // namespace auscult
