#include "nids/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "nids/kernels.hpp"

namespace nids::gan {

using json = nlohmann::ordered_json;

void GanConfig::validate() const {
    if (latent_dim < 1) throw Error("gan config: latent_dim must be >= 1");
    if (gen_hidden.size() != 4) throw Error("gan config: generator takes exactly 4 hidden widths");
    if (disc_hidden.size() != 3) throw Error("gan config: discriminator takes exactly 3 hidden widths");
    for (int w : gen_hidden)
        if (w < 1) throw Error("gan config: generator widths must be >= 1");
    for (int w : disc_hidden)
        if (w < 1) throw Error("gan config: discriminator widths must be >= 1");
    if (epochs < 1) throw Error("gan config: epochs must be >= 1");
    if (batch_size < 2) throw Error("gan config: batch_size must be >= 2 (batch norm)");
    if (!(learning_rate > 0)) throw Error("gan config: learning_rate must be > 0");
}

// ---------------------------------------------------------------------------
// elementwise pieces
// ---------------------------------------------------------------------------

namespace {

inline double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void leaky_relu_inplace(Matrix& m, double slope) {
    kernels::parallel_for(m.rows, [&](std::size_t r) {
        double* p = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) p[c] = p[c] > 0.0 ? p[c] : slope * p[c];
    });
}

void sigmoid_inplace(Matrix& m) {
    kernels::parallel_for(m.rows, [&](std::size_t r) {
        double* p = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) p[c] = sigmoid(p[c]);
    });
}

} // namespace

std::vector<double> leaky_relu(std::span<const double> v, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) throw Error("leaky_relu: slope must be in (0,1)");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : slope * v[i];
    return out;
}

double bce_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw Error("bce_loss: length mismatch");
    if (predictions.empty()) throw Error("bce_loss: empty input");
    constexpr double eps = 1e-7;
    double loss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = std::clamp(predictions[i], eps, 1.0 - eps);
        loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
    return loss / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// batch norm
// ---------------------------------------------------------------------------

namespace {

struct BnCache {
    Matrix x;    // input (post-activation)
    Matrix xhat; // normalized pre scale/shift
    std::vector<double> mean, var, invstd;
};

Matrix bn_forward_train(const Matrix& x, BatchNormState& st, BnCache* cache, bool update_running) {
    const std::size_t n = x.rows, w = x.cols;
    if (n < 2) throw Error("batch_norm_forward: train mode needs a batch of >= 2 rows");
    Matrix y(n, w);
    std::vector<double> mean(w), var(w), invstd(w);
    Matrix xhat(n, w);
    kernels::parallel_for(w, [&](std::size_t j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x(i, j);
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x(i, j) - m;
            v += d * d;
        }
        v /= static_cast<double>(n); // biased batch variance
        const double is = 1.0 / std::sqrt(v + st.epsilon);
        mean[j] = m;
        var[j] = v;
        invstd[j] = is;
        for (std::size_t i = 0; i < n; ++i) {
            const double xh = (x(i, j) - m) * is;
            xhat(i, j) = xh;
            y(i, j) = st.scale[j] * xh + st.shift[j];
        }
    });
    if (update_running) {
        for (std::size_t j = 0; j < w; ++j) {
            st.running_mean[j] = (1.0 - st.momentum) * st.running_mean[j] + st.momentum * mean[j];
            st.running_var[j] = (1.0 - st.momentum) * st.running_var[j] + st.momentum * var[j];
        }
    }
    if (cache) {
        cache->x = x;
        cache->xhat = std::move(xhat);
        cache->mean = std::move(mean);
        cache->var = std::move(var);
        cache->invstd = std::move(invstd);
    }
    return y;
}

Matrix bn_forward_eval(const Matrix& x, const BatchNormState& st) {
    Matrix y(x.rows, x.cols);
    kernels::parallel_for(x.rows, [&](std::size_t i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double is = 1.0 / std::sqrt(st.running_var[j] + st.epsilon);
            y(i, j) = st.scale[j] * (x(i, j) - st.running_mean[j]) * is + st.shift[j];
        }
    });
    return y;
}

// standard batch-norm backward; dy -> dx plus parameter grads
void bn_backward(const BnCache& cache, const BatchNormState& st, const Matrix& dy, Matrix& dx,
                 std::vector<double>& dscale, std::vector<double>& dshift) {
    const std::size_t n = cache.x.rows, w = cache.x.cols;
    dx = Matrix(n, w);
    dscale.assign(w, 0.0);
    dshift.assign(w, 0.0);
    kernels::parallel_for(w, [&](std::size_t j) {
        const double is = cache.invstd[j];
        double ds = 0.0, dsh = 0.0, dvar = 0.0, dmean_a = 0.0, sum_xmu = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = dy(i, j);
            ds += g * cache.xhat(i, j);
            dsh += g;
            const double dxhat = g * st.scale[j];
            const double xmu = cache.x(i, j) - cache.mean[j];
            dvar += dxhat * xmu;
            dmean_a += dxhat;
            sum_xmu += xmu;
        }
        dvar *= -0.5 * is * is * is;
        const double dmean = -dmean_a * is + dvar * (-2.0 / static_cast<double>(n)) * sum_xmu;
        for (std::size_t i = 0; i < n; ++i) {
            const double dxhat = dy(i, j) * st.scale[j];
            const double xmu = cache.x(i, j) - cache.mean[j];
            dx(i, j) = dxhat * is + dvar * 2.0 * xmu / static_cast<double>(n) + dmean / static_cast<double>(n);
        }
        dscale[j] = ds;
        dshift[j] = dsh;
    });
}

} // namespace

Matrix batch_norm_forward(const Matrix& batch, BatchNormState& state, bool training) {
    if (training) return bn_forward_train(batch, state, nullptr, true);
    return bn_forward_eval(batch, state);
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

namespace {

DenseLayer init_dense(int out, int in, std::uint64_t seed) {
    DenseLayer l;
    l.W = Matrix(out, in);
    l.b.assign(out, 0.0);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    for (double& w : l.W.data) w = dist(eng);
    return l;
}

BatchNormState init_bn(int width) {
    BatchNormState st;
    st.scale.assign(width, 1.0);
    st.shift.assign(width, 0.0);
    st.running_mean.assign(width, 0.0);
    st.running_var.assign(width, 1.0);
    return st;
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& eng) {
    Matrix z(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : z.data) v = dist(eng);
    return z;
}

} // namespace

GeneratorNet init_generator(const GanConfig& cfg, int feature_width) {
    cfg.validate();
    GeneratorNet g;
    g.latent_dim = cfg.latent_dim;
    int in = cfg.latent_dim;
    for (std::size_t i = 0; i < cfg.gen_hidden.size(); ++i) {
        g.blocks.push_back(init_dense(cfg.gen_hidden[i], in, mix_seed(cfg.seed, 0x47 + i)));
        g.bn.push_back(init_bn(cfg.gen_hidden[i]));
        in = cfg.gen_hidden[i];
    }
    g.out = init_dense(feature_width, in, mix_seed(cfg.seed, 0x47 + cfg.gen_hidden.size()));
    return g;
}

DiscriminatorNet init_discriminator(const GanConfig& cfg, int feature_width) {
    cfg.validate();
    DiscriminatorNet d;
    int in = feature_width;
    for (std::size_t i = 0; i < cfg.disc_hidden.size(); ++i) {
        d.blocks.push_back(init_dense(cfg.disc_hidden[i], in, mix_seed(cfg.seed, 0xD1 + i)));
        in = cfg.disc_hidden[i];
    }
    d.out = init_dense(1, in, mix_seed(cfg.seed, 0xD1 + cfg.disc_hidden.size()));
    return d;
}

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

namespace {

struct GenCaches {
    std::vector<Matrix> inputs; // input to each block dense
    std::vector<Matrix> pre;    // dense outputs (pre-activation)
    std::vector<BnCache> bn;    // batch-norm internals (x is the post-LeakyReLU input)
    Matrix out_in;              // input to the output dense
    Matrix y;                   // sigmoid output
};

Matrix gen_forward_impl(GeneratorNet& g, const Matrix& z, bool training, bool update_running, GenCaches* caches) {
    if (static_cast<int>(z.cols) != g.latent_dim) throw Error("generator_forward: z width != latent_dim");
    Matrix a = z;
    for (std::size_t i = 0; i < g.blocks.size(); ++i) {
        Matrix pre;
        kernels::linear_forward(a, g.blocks[i].W, g.blocks[i].b, pre);
        if (caches) {
            caches->inputs.push_back(std::move(a));
            caches->pre.push_back(pre);
        }
        Matrix act = std::move(pre);
        leaky_relu_inplace(act, kLeakySlope);
        Matrix bn_out;
        if (training) {
            BnCache* bc = nullptr;
            if (caches) {
                caches->bn.emplace_back();
                bc = &caches->bn.back();
            }
            bn_out = bn_forward_train(act, g.bn[i], bc, update_running);
        } else {
            bn_out = bn_forward_eval(act, g.bn[i]);
        }
        a = std::move(bn_out);
    }
    Matrix pre;
    kernels::linear_forward(a, g.out.W, g.out.b, pre);
    if (caches) caches->out_in = std::move(a);
    sigmoid_inplace(pre);
    if (caches) caches->y = pre;
    return pre;
}

struct DiscCaches {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
    Matrix out_in;
    std::vector<double> p; // sigmoid outputs
};

std::vector<double> disc_forward_impl(const DiscriminatorNet& d, const Matrix& X, DiscCaches* caches) {
    Matrix a = X;
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        Matrix pre;
        kernels::linear_forward(a, d.blocks[i].W, d.blocks[i].b, pre);
        if (caches) {
            caches->inputs.push_back(std::move(a));
            caches->pre.push_back(pre);
        }
        leaky_relu_inplace(pre, kLeakySlope);
        a = std::move(pre);
    }
    Matrix u;
    kernels::linear_forward(a, d.out.W, d.out.b, u);
    if (caches) caches->out_in = std::move(a);
    std::vector<double> p(u.rows);
    for (std::size_t i = 0; i < u.rows; ++i) p[i] = sigmoid(u(i, 0));
    if (caches) caches->p = p;
    return p;
}

// gradient of mean BCE w.r.t. the output logits, then back through the layers;
// returns gradient w.r.t. the input rows (needed by the generator step)
Matrix disc_backward(const DiscriminatorNet& d, const DiscCaches& caches, std::span<const double> targets,
                     DiscGrads& grads) {
    const std::size_t n = caches.p.size();
    Matrix du(n, 1);
    for (std::size_t i = 0; i < n; ++i) du(i, 0) = (caches.p[i] - targets[i]) / static_cast<double>(n);

    grads.dW.resize(d.blocks.size() + 1);
    grads.db.resize(d.blocks.size() + 1);
    kernels::linear_backward_params(du, caches.out_in, grads.dW.back(), grads.db.back());
    Matrix da;
    kernels::linear_backward_data(du, d.out.W, da);

    for (int i = static_cast<int>(d.blocks.size()) - 1; i >= 0; --i) {
        // through LeakyReLU
        const Matrix& pre = caches.pre[i];
        kernels::parallel_for(da.rows, [&](std::size_t r) {
            double* g = da.data.data() + r * da.cols;
            const double* p = pre.data.data() + r * pre.cols;
            for (std::size_t c = 0; c < da.cols; ++c)
                if (p[c] <= 0.0) g[c] *= kLeakySlope;
        });
        kernels::linear_backward_params(da, caches.inputs[i], grads.dW[i], grads.db[i]);
        Matrix prev;
        kernels::linear_backward_data(da, d.blocks[i].W, prev);
        da = std::move(prev);
    }
    return da;
}

} // namespace

Matrix generator_forward(const GeneratorNet& g, const Matrix& z) {
    return gen_forward_impl(const_cast<GeneratorNet&>(g), z, false, false, nullptr);
}

Matrix generator_forward_train(GeneratorNet& g, const Matrix& z) {
    return gen_forward_impl(g, z, true, true, nullptr);
}

std::vector<double> discriminator_forward(const DiscriminatorNet& d, const Matrix& X) {
    return disc_forward_impl(d, X, nullptr);
}

double disc_loss_grads(const DiscriminatorNet& d, const Matrix& X, std::span<const double> targets,
                       DiscGrads* grads) {
    if (X.rows != targets.size()) throw Error("disc_loss_grads: target length mismatch");
    DiscCaches caches;
    std::vector<double> p = disc_forward_impl(d, X, grads ? &caches : nullptr);
    const double loss = bce_loss(p, targets);
    if (grads) disc_backward(d, caches, targets, *grads);
    return loss;
}

double gen_loss_grads(GeneratorNet& g, const DiscriminatorNet& d, const Matrix& z, GenGrads* grads,
                      bool update_running) {
    GenCaches gc;
    Matrix y = gen_forward_impl(g, z, true, update_running, grads ? &gc : nullptr);
    if (!grads) {
        DiscCaches unused;
        std::vector<double> p = disc_forward_impl(d, y, nullptr);
        std::vector<double> ones(p.size(), 1.0);
        return bce_loss(p, ones);
    }

    DiscCaches dc;
    std::vector<double> p = disc_forward_impl(d, gc.y, &dc);
    std::vector<double> ones(p.size(), 1.0);
    const double loss = bce_loss(p, ones);

    DiscGrads dummy;
    Matrix dy = disc_backward(d, dc, ones, dummy); // D params untouched; only the input grad is used

    // through the output sigmoid
    kernels::parallel_for(dy.rows, [&](std::size_t r) {
        double* gptr = dy.data.data() + r * dy.cols;
        const double* yv = gc.y.data.data() + r * gc.y.cols;
        for (std::size_t c = 0; c < dy.cols; ++c) gptr[c] *= yv[c] * (1.0 - yv[c]);
    });

    const std::size_t nb = g.blocks.size();
    grads->dW.resize(nb + 1);
    grads->db.resize(nb + 1);
    grads->dscale.resize(nb);
    grads->dshift.resize(nb);

    kernels::linear_backward_params(dy, gc.out_in, grads->dW.back(), grads->db.back());
    Matrix da;
    kernels::linear_backward_data(dy, g.out.W, da);

    for (int i = static_cast<int>(nb) - 1; i >= 0; --i) {
        Matrix dact;
        bn_backward(gc.bn[i], g.bn[i], da, dact, grads->dscale[i], grads->dshift[i]);
        const Matrix& pre = gc.pre[i];
        kernels::parallel_for(dact.rows, [&](std::size_t r) {
            double* gr = dact.data.data() + r * dact.cols;
            const double* pv = pre.data.data() + r * pre.cols;
            for (std::size_t c = 0; c < dact.cols; ++c)
                if (pv[c] <= 0.0) gr[c] *= kLeakySlope;
        });
        kernels::linear_backward_params(dact, gc.inputs[i], grads->dW[i], grads->db[i]);
        Matrix prev;
        kernels::linear_backward_data(dact, g.blocks[i].W, prev);
        da = std::move(prev);
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

namespace {

struct AdamBuf {
    std::vector<double> m, v;
};

void adam_step(std::span<double> theta, std::span<const double> grad, AdamBuf& buf, long long t, double lr,
               double b1, double b2) {
    constexpr double eps = 1e-8;
    if (buf.m.empty()) {
        buf.m.assign(theta.size(), 0.0);
        buf.v.assign(theta.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        buf.m[i] = b1 * buf.m[i] + (1.0 - b1) * grad[i];
        buf.v[i] = b2 * buf.v[i] + (1.0 - b2) * grad[i] * grad[i];
        theta[i] -= lr * (buf.m[i] / c1) / (std::sqrt(buf.v[i] / c2) + eps);
    }
}

} // namespace

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

GanTrainResult train_gan(const Matrix& class_rows, const GanConfig& cfg) {
    cfg.validate();
    if (class_rows.rows < static_cast<std::size_t>(cfg.batch_size))
        throw Error("train_gan: class has " + std::to_string(class_rows.rows) + " rows, fewer than batch_size " +
                    std::to_string(cfg.batch_size));
    for (double v : class_rows.data)
        if (!(v >= 0.0 && v <= 1.0)) throw Error("train_gan: feature values must lie in [0,1]");

    const int fw = static_cast<int>(class_rows.cols);
    GanTrainResult res;
    res.generator = init_generator(cfg, fw);
    res.discriminator = init_discriminator(cfg, fw);

    const std::size_t nb_tensors_d = res.discriminator.blocks.size() + 1;
    const std::size_t nb = res.generator.blocks.size();
    std::vector<AdamBuf> d_w(nb_tensors_d), d_b(nb_tensors_d);
    std::vector<AdamBuf> g_w(nb + 1), g_b(nb + 1), g_s(nb), g_t(nb);
    long long d_step = 0, g_step = 0;

    std::mt19937_64 eng(mix_seed(cfg.seed, 0xE70C));
    std::vector<int> perm(class_rows.rows);
    std::iota(perm.begin(), perm.end(), 0);
    const int B = cfg.batch_size;
    const int batches = static_cast<int>(class_rows.rows) / B;

    std::vector<double> targets_dstep(2 * B);
    std::fill(targets_dstep.begin(), targets_dstep.begin() + B, 1.0);
    std::fill(targets_dstep.begin() + B, targets_dstep.end(), 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), eng);
        double ep_d = 0.0, ep_g = 0.0;
        for (int b = 0; b < batches; ++b) {
            Matrix real(B, fw);
            for (int i = 0; i < B; ++i)
                std::copy_n(class_rows.data.data() + std::size_t(perm[b * B + i]) * fw, fw,
                            real.data.data() + std::size_t(i) * fw);

            // discriminator step: real vs fresh fakes
            Matrix z1 = normal_matrix(B, cfg.latent_dim, eng);
            Matrix fake = generator_forward_train(res.generator, z1);
            Matrix both(2 * B, fw);
            std::copy(real.data.begin(), real.data.end(), both.data.begin());
            std::copy(fake.data.begin(), fake.data.end(), both.data.begin() + real.data.size());
            DiscGrads dg;
            const double d_loss = disc_loss_grads(res.discriminator, both, targets_dstep, &dg);
            ++d_step;
            for (std::size_t i = 0; i < nb_tensors_d; ++i) {
                DenseLayer& l = i < res.discriminator.blocks.size() ? res.discriminator.blocks[i]
                                                                    : res.discriminator.out;
                adam_step(l.W.data, dg.dW[i].data, d_w[i], d_step, cfg.learning_rate, cfg.beta1, cfg.beta2);
                adam_step(l.b, dg.db[i], d_b[i], d_step, cfg.learning_rate, cfg.beta1, cfg.beta2);
            }

            // generator step
            Matrix z2 = normal_matrix(B, cfg.latent_dim, eng);
            GenGrads gg;
            const double g_loss = gen_loss_grads(res.generator, res.discriminator, z2, &gg, true);
            ++g_step;
            for (std::size_t i = 0; i <= nb; ++i) {
                DenseLayer& l = i < nb ? res.generator.blocks[i] : res.generator.out;
                adam_step(l.W.data, gg.dW[i].data, g_w[i], g_step, cfg.learning_rate, cfg.beta1, cfg.beta2);
                adam_step(l.b, gg.db[i], g_b[i], g_step, cfg.learning_rate, cfg.beta1, cfg.beta2);
            }
            for (std::size_t i = 0; i < nb; ++i) {
                adam_step(res.generator.bn[i].scale, gg.dscale[i], g_s[i], g_step, cfg.learning_rate, cfg.beta1,
                          cfg.beta2);
                adam_step(res.generator.bn[i].shift, gg.dshift[i], g_t[i], g_step, cfg.learning_rate, cfg.beta1,
                          cfg.beta2);
            }

            ep_d += d_loss;
            ep_g += g_loss;
        }
        res.trace.d_loss.push_back(ep_d / batches);
        res.trace.g_loss.push_back(ep_g / batches);
    }
    return res;
}

// ---------------------------------------------------------------------------
// synthesis and augmentation
// ---------------------------------------------------------------------------

Matrix synthesize(const GeneratorNet& g, int n, std::uint64_t seed, const Postprocess& post) {
    if (n < 1) throw Error("synthesize: n must be >= 1");
    std::mt19937_64 eng(seed);
    Matrix z = normal_matrix(n, g.latent_dim, eng);
    Matrix y = generator_forward(g, z);
    kernels::parallel_for(y.rows, [&](std::size_t r) {
        double* row = y.data.data() + r * y.cols;
        for (const Postprocess::OneHotBlock& blk : post.onehot) {
            if (blk.active.empty()) continue;
            int best = blk.active[0];
            for (int off : blk.active)
                if (row[blk.start + off] > row[blk.start + best]) best = off;
            for (int off : blk.active) row[blk.start + off] = off == best ? 1.0 : 0.0;
        }
        for (const Postprocess::OrdinalCol& oc : post.ordinal) {
            if (oc.levels <= 1) {
                row[oc.col] = 0.0;
                continue;
            }
            const double grid = static_cast<double>(oc.levels - 1);
            double snapped = std::round(std::clamp(row[oc.col], 0.0, 1.0) * grid) / grid;
            row[oc.col] = snapped;
        }
    });
    return y;
}

namespace {

struct ColumnScaler {
    std::vector<double> lo, hi;

    static ColumnScaler fit(const Matrix& m) {
        ColumnScaler s;
        s.lo.assign(m.cols, 0.0);
        s.hi.assign(m.cols, 0.0);
        for (std::size_t j = 0; j < m.cols; ++j) {
            double mn = m(0, j), mx = mn;
            for (std::size_t i = 1; i < m.rows; ++i) {
                mn = std::min(mn, m(i, j));
                mx = std::max(mx, m(i, j));
            }
            s.lo[j] = mn;
            s.hi[j] = mx;
        }
        return s;
    }

    Matrix scale(const Matrix& m) const {
        Matrix out(m.rows, m.cols);
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) {
                const double span = hi[j] - lo[j];
                out(i, j) = span > 0.0 ? (m(i, j) - lo[j]) / span : 0.0;
            }
        return out;
    }

    void unscale_inplace(Matrix& m) const {
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) {
                const double span = hi[j] - lo[j];
                m(i, j) = span > 0.0 ? lo[j] + m(i, j) * span : lo[j];
            }
    }
};

// snap rules expressed in the class's scaled space
Postprocess build_postprocess(const preprocess::FittedEncoder& enc, const ColumnScaler& sc) {
    Postprocess post;
    for (const preprocess::EncodedColumn& ec : enc.columns) {
        if (ec.directive == preprocess::Directive::onehot) {
            Postprocess::OneHotBlock blk;
            blk.start = ec.out_start;
            blk.width = ec.out_width;
            for (int off = 0; off < ec.out_width; ++off)
                if (sc.hi[ec.out_start + off] > sc.lo[ec.out_start + off]) blk.active.push_back(off);
            post.onehot.push_back(std::move(blk));
        } else if (ec.directive == preprocess::Directive::ordinal) {
            // class codes span [lo, hi] integers; the scaled grid has hi-lo+1 levels
            const int levels = static_cast<int>(std::lround(sc.hi[ec.out_start] - sc.lo[ec.out_start])) + 1;
            post.ordinal.push_back({ec.out_start, std::max(1, levels)});
        }
    }
    return post;
}

} // namespace

AugmentResult augment(const preprocess::FeatureMatrix& train, const std::map<std::string, int>& targets,
                      const GanConfig& cfg, const preprocess::FittedEncoder& enc) {
    if (train.feature_names != enc.feature_names)
        throw Error("augment: training matrix layout does not match the encoder");

    AugmentResult res;
    res.augmented = train;
    if (targets.empty()) return res;
    cfg.validate();

    std::vector<long long> counts(train.class_names.size(), 0);
    for (int id : train.class_ids) ++counts[id];

    for (const auto& [name, target] : targets) {
        auto it = std::find(train.class_names.begin(), train.class_names.end(), name);
        if (it == train.class_names.end()) throw Error("augment: class '" + name + "' not present in training data");
        const int id = static_cast<int>(it - train.class_names.begin());
        if (counts[id] == 0) throw Error("augment: class '" + name + "' has no training rows");
        const int deficit = target - static_cast<int>(counts[id]);
        if (deficit <= 0) continue;

        Matrix rows(counts[id], train.values.cols);
        std::size_t at = 0;
        for (std::size_t i = 0; i < train.n_rows(); ++i)
            if (train.class_ids[i] == id)
                std::copy_n(train.values.data.data() + i * train.values.cols, train.values.cols,
                            rows.data.data() + (at++) * train.values.cols);

        ColumnScaler scaler = ColumnScaler::fit(rows);
        Matrix scaled = scaler.scale(rows);

        GanConfig class_cfg = cfg;
        class_cfg.seed = mix_seed(cfg.seed, hash_name(name));
        GanTrainResult trained = train_gan(scaled, class_cfg);

        Postprocess post = build_postprocess(enc, scaler);
        Matrix synth = synthesize(trained.generator, deficit, mix_seed(class_cfg.seed, 0x5EED), post);
        scaler.unscale_inplace(synth);

        for (std::size_t r = 0; r < synth.rows; ++r) {
            res.augmented.values.append_row(synth.row(r));
            res.augmented.class_ids.push_back(id);
        }

        PerClassAugment pca;
        pca.class_name = name;
        pca.class_id = id;
        pca.added = deficit;
        pca.generator = std::move(trained.generator);
        pca.discriminator = std::move(trained.discriminator);
        pca.trace = std::move(trained.trace);
        pca.synthetic = std::move(synth);
        res.per_class.push_back(std::move(pca));
    }
    return res;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
    out << "epoch,g_loss,d_loss\n";
    for (std::size_t e = 0; e < trace.g_loss.size(); ++e)
        out << e << ',' << format_double(trace.g_loss[e]) << ',' << format_double(trace.d_loss[e]) << '\n';
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.data;
    return j;
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw Error("gan file: matrix size mismatch");
    return m;
}

json dense_to_json(const DenseLayer& l) {
    json j;
    j["W"] = matrix_to_json(l.W);
    j["b"] = l.b;
    return j;
}

DenseLayer dense_from_json(const json& j) {
    DenseLayer l;
    l.W = matrix_from_json(j.at("W"));
    l.b = j.at("b").get<std::vector<double>>();
    return l;
}

json bn_to_json(const BatchNormState& st) {
    json j;
    j["scale"] = st.scale;
    j["shift"] = st.shift;
    j["running_mean"] = st.running_mean;
    j["running_var"] = st.running_var;
    j["momentum"] = st.momentum;
    j["epsilon"] = st.epsilon;
    return j;
}

BatchNormState bn_from_json(const json& j) {
    BatchNormState st;
    st.scale = j.at("scale").get<std::vector<double>>();
    st.shift = j.at("shift").get<std::vector<double>>();
    st.running_mean = j.at("running_mean").get<std::vector<double>>();
    st.running_var = j.at("running_var").get<std::vector<double>>();
    st.momentum = j.at("momentum").get<double>();
    st.epsilon = j.at("epsilon").get<double>();
    return st;
}

} // namespace

void save_gan(const std::string& path, const GeneratorNet& g, const DiscriminatorNet& d) {
    json j;
    j["format"] = "nids.gan.v1";
    j["latent_dim"] = g.latent_dim;
    json gb = json::array(), gbn = json::array(), db = json::array();
    for (const DenseLayer& l : g.blocks) gb.push_back(dense_to_json(l));
    for (const BatchNormState& st : g.bn) gbn.push_back(bn_to_json(st));
    for (const DenseLayer& l : d.blocks) db.push_back(dense_to_json(l));
    j["generator"] = {{"blocks", std::move(gb)}, {"bn", std::move(gbn)}, {"out", dense_to_json(g.out)}};
    j["discriminator"] = {{"blocks", std::move(db)}, {"out", dense_to_json(d.out)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write gan file: " + path);
    out << j.dump() << '\n';
}

std::pair<GeneratorNet, DiscriminatorNet> load_gan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("gan file not found: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "nids.gan.v1") throw Error("gan file " + path + ": unknown format");
    GeneratorNet g;
    g.latent_dim = j.at("latent_dim").get<int>();
    for (const json& l : j.at("generator").at("blocks")) g.blocks.push_back(dense_from_json(l));
    for (const json& st : j.at("generator").at("bn")) g.bn.push_back(bn_from_json(st));
    g.out = dense_from_json(j.at("generator").at("out"));
    DiscriminatorNet d;
    for (const json& l : j.at("discriminator").at("blocks")) d.blocks.push_back(dense_from_json(l));
    d.out = dense_from_json(j.at("discriminator").at("out"));
    return {std::move(g), std::move(d)};
}

} // namespace nids::gan
