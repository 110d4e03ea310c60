#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tavp/tensor.hpp"

#include "tensor_internal.hpp"

namespace tavp {

using detail::attach;
using detail::new_node;
using detail::Node;

namespace {

// C[m,n] += A[m,k] * B[k,n]
void mm_nn(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        double* cp = c + i * n;
        const double* ap = a + i * k;
        for (int64_t p = 0; p < k; ++p) {
            double av = ap[p];
            if (av == 0.0) continue;
            const double* bp = b + p * n;
            for (int64_t j = 0; j < n; ++j) cp[j] += av * bp[j];
        }
    }
}

// C[m,k] += A[m,n] * B[k,n]^T  (dot-product form, both rows contiguous)
void mm_nt(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k) {
    for (int64_t i = 0; i < m; ++i) {
        const double* ap = a + i * n;
        double* cp = c + i * k;
        for (int64_t j = 0; j < k; ++j) {
            const double* bp = b + j * n;
            double acc = 0.0;
            for (int64_t p = 0; p < n; ++p) acc += ap[p] * bp[p];
            cp[j] += acc;
        }
    }
}

// C[k,n] += A[m,k]^T * B[m,n]
void mm_tn(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const double* ap = a + i * k;
        const double* bp = b + i * n;
        for (int64_t p = 0; p < k; ++p) {
            double av = ap[p];
            if (av == 0.0) continue;
            double* cp = c + p * n;
            for (int64_t j = 0; j < n; ++j) cp[j] += av * bp[j];
        }
    }
}

struct AxisSplit {
    int64_t outer = 1;
    int64_t extent = 1;
    int64_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, int64_t axis) {
    AxisSplit s;
    s.extent = shape[static_cast<size_t>(axis)];
    for (int64_t a = 0; a < axis; ++a) s.outer *= shape[static_cast<size_t>(a)];
    for (int64_t a = axis + 1; a < static_cast<int64_t>(shape.size()); ++a) {
        s.inner *= shape[static_cast<size_t>(a)];
    }
    return s;
}

// im2col for cross-correlation: col[(c,dy,dx), (oy,ox)] = img[c, oy*s+dy-p, ox*s+dx-p]
void im2col(const double* img, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, double* col) {
    const int64_t P = Ho * Wo;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t dy = 0; dy < kh; ++dy) {
            for (int64_t dx = 0; dx < kw; ++dx) {
                double* row = col + ((c * kh + dy) * kw + dx) * P;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride + dy - pad;
                    if (iy < 0 || iy >= H) {
                        std::fill(row + oy * Wo, row + (oy + 1) * Wo, 0.0);
                        continue;
                    }
                    const double* src = img + (c * H + iy) * W;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride + dx - pad;
                        row[oy * Wo + ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add col back into the image.
void col2im_add(const double* col, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
                int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, double* img) {
    const int64_t P = Ho * Wo;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t dy = 0; dy < kh; ++dy) {
            for (int64_t dx = 0; dx < kw; ++dx) {
                const double* row = col + ((c * kh + dy) * kw + dx) * P;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride + dy - pad;
                    if (iy < 0 || iy >= H) continue;
                    double* dst = img + (c * H + iy) * W;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride + dx - pad;
                        if (ix >= 0 && ix < W) dst[ix] += row[oy * Wo + ox];
                    }
                }
            }
        }
    }
}

} // namespace

// ---- matmul -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.dim() < 2 || b.dim() < 2) {
        throw ShapeError("matmul: both operands must have rank >= 2, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    }
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    int64_t m = sa[sa.size() - 2];
    int64_t ka = sa[sa.size() - 1];
    int64_t kb = sb[sb.size() - 2];
    int64_t n = sb[sb.size() - 1];
    if (ka != kb) {
        throw ShapeError("matmul: inner extents differ for " + shape_str(sa) + " and " + shape_str(sb));
    }

    Shape batch_a(sa.begin(), sa.end() - 2);
    Shape batch_b(sb.begin(), sb.end() - 2);
    size_t bd = std::max(batch_a.size(), batch_b.size());
    Shape batch(bd);
    for (size_t i = 0; i < bd; ++i) {
        int64_t ea = i < bd - batch_a.size() ? 1 : batch_a[i - (bd - batch_a.size())];
        int64_t eb = i < bd - batch_b.size() ? 1 : batch_b[i - (bd - batch_b.size())];
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError("matmul: batch extents of " + shape_str(sa) + " and " + shape_str(sb) +
                             " are not broadcast-compatible");
        }
        batch[i] = std::max(ea, eb);
    }

    Shape out_shape = batch;
    out_shape.push_back(m);
    out_shape.push_back(n);
    auto out = new_node(out_shape, "matmul");

    // Matrix-granular strides aligned to the broadcast batch shape.
    auto mat_strides = [](const Shape& from, const Shape& to) {
        std::vector<int64_t> st(to.size(), 0);
        int64_t acc = 1;
        size_t shift = to.size() - from.size();
        for (int64_t i = static_cast<int64_t>(from.size()) - 1; i >= 0; --i) {
            auto fi = static_cast<size_t>(i);
            st[shift + fi] = (from[fi] == 1 && to[shift + fi] != 1) ? 0 : acc;
            acc *= from[fi];
        }
        return st;
    };
    auto st_a = mat_strides(batch_a, batch);
    auto st_b = mat_strides(batch_b, batch);

    const int64_t n_batches = shape_numel(batch);
    const int64_t mat_a = m * ka, mat_b = ka * n, mat_o = m * n;

    // Captured by value: the same walker is reused inside the backward closure.
    auto for_each_batch = [batch, st_a, st_b, n_batches](auto&& fn) {
        std::vector<int64_t> idx(batch.size(), 0);
        int64_t oa = 0, ob = 0;
        for (int64_t lin = 0; lin < n_batches; ++lin) {
            fn(lin, oa, ob);
            for (int64_t ax = static_cast<int64_t>(batch.size()) - 1; ax >= 0; --ax) {
                auto ai = static_cast<size_t>(ax);
                if (++idx[ai] < batch[ai]) {
                    oa += st_a[ai];
                    ob += st_b[ai];
                    break;
                }
                oa -= st_a[ai] * (batch[ai] - 1);
                ob -= st_b[ai] * (batch[ai] - 1);
                idx[ai] = 0;
            }
        }
    };

    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for_each_batch([&](int64_t lin, int64_t oa, int64_t ob) {
        mm_nn(out->data.data() + lin * mat_o, pa + oa * mat_a, pb + ob * mat_b, m, ka, n);
    });

    auto an = a.node();
    auto bn = b.node();
    attach(out, {an, bn}, [an, bn, for_each_batch, m, ka, n, mat_a, mat_b, mat_o](Node& o) {
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for_each_batch([&](int64_t lin, int64_t oa, int64_t ob) {
            const double* go = o.grad.data() + lin * mat_o;
            if (an->requires_grad) {
                // dA = dC * B^T
                mm_nt(an->grad.data() + oa * mat_a, go, bn->data.data() + ob * mat_b, m, n, ka);
            }
            if (bn->requires_grad) {
                // dB = A^T * dC
                mm_tn(bn->grad.data() + ob * mat_b, an->data.data() + oa * mat_a, go, m, ka, n);
            }
        });
    });
    return Tensor(out);
}

// ---- conv2d -------------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t padding) {
    if (x.dim() != 4 || k.dim() != 4) {
        throw ShapeError("conv2d: need x[B,Cin,H,W] and k[Cout,Cin,kh,kw], got " +
                         shape_str(x.shape()) + " and " + shape_str(k.shape()));
    }
    if (stride < 1 || padding < 0) throw ShapeError("conv2d: invalid stride/padding");
    const int64_t B = x.size(0), Ci = x.size(1), H = x.size(2), W = x.size(3);
    const int64_t Co = k.size(0), kh = k.size(2), kw = k.size(3);
    if (k.size(1) != Ci) {
        throw ShapeError("conv2d: channel mismatch between " + shape_str(x.shape()) + " and " +
                         shape_str(k.shape()));
    }
    if (kh > H + 2 * padding || kw > W + 2 * padding) {
        throw ShapeError("conv2d: kernel " + shape_str(k.shape()) + " larger than padded input " +
                         shape_str(x.shape()));
    }
    const int64_t Ho = (H + 2 * padding - kh) / stride + 1;
    const int64_t Wo = (W + 2 * padding - kw) / stride + 1;
    const int64_t theta = Ci * kh * kw;
    const int64_t P = Ho * Wo;

    auto out = new_node(Shape{B, Co, Ho, Wo}, "conv2d");
    std::vector<double> col(static_cast<size_t>(theta * P));
    const double* px = x.data().data();
    const double* pk = k.data().data();
    for (int64_t b = 0; b < B; ++b) {
        im2col(px + b * Ci * H * W, Ci, H, W, kh, kw, stride, padding, Ho, Wo, col.data());
        mm_nn(out->data.data() + b * Co * P, pk, col.data(), Co, theta, P);
    }

    auto xn = x.node();
    auto kn = k.node();
    attach(out, {xn, kn},
           [xn, kn, B, Ci, H, W, Co, kh, kw, stride, padding, Ho, Wo, theta, P](Node& o) {
               if (xn->requires_grad) xn->ensure_grad();
               if (kn->requires_grad) kn->ensure_grad();
               std::vector<double> col(static_cast<size_t>(theta * P));
               for (int64_t b = 0; b < B; ++b) {
                   const double* go = o.grad.data() + b * Co * P;
                   if (kn->requires_grad) {
                       im2col(xn->data.data() + b * Ci * H * W, Ci, H, W, kh, kw, stride, padding,
                              Ho, Wo, col.data());
                       // dK[co, theta] += sum_p go[co,p] * col[theta,p]
                       mm_nt(kn->grad.data(), go, col.data(), Co, P, theta);
                   }
                   if (xn->requires_grad) {
                       std::fill(col.begin(), col.end(), 0.0);
                       // dcol = K^T * go
                       mm_tn(col.data(), kn->data.data(), go, Co, theta, P);
                       col2im_add(col.data(), Ci, H, W, kh, kw, stride, padding, Ho, Wo,
                                  xn->grad.data() + b * Ci * H * W);
                   }
               }
           });
    return Tensor(out);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t padding) {
    if (x.dim() != 4 || k.dim() != 4) {
        throw ShapeError("conv_transpose2d: need x[B,Cin,h,w] and k[Cin,Cout,kh,kw], got " +
                         shape_str(x.shape()) + " and " + shape_str(k.shape()));
    }
    if (stride < 1 || padding < 0) throw ShapeError("conv_transpose2d: invalid stride/padding");
    const int64_t B = x.size(0), Ci = x.size(1), h = x.size(2), w = x.size(3);
    const int64_t Co = k.size(1), kh = k.size(2), kw = k.size(3);
    if (k.size(0) != Ci) {
        throw ShapeError("conv_transpose2d: channel mismatch between " + shape_str(x.shape()) +
                         " and " + shape_str(k.shape()));
    }
    const int64_t Ho = (h - 1) * stride - 2 * padding + kh;
    const int64_t Wo = (w - 1) * stride - 2 * padding + kw;
    if (Ho < 1 || Wo < 1) {
        throw ShapeError("conv_transpose2d: kernel " + shape_str(k.shape()) +
                         " with given stride/padding yields empty output for " + shape_str(x.shape()));
    }
    const int64_t theta = Co * kh * kw; // kernel viewed as [Ci, Co*kh*kw]
    const int64_t P = h * w;

    auto out = new_node(Shape{B, Co, Ho, Wo}, "conv_transpose2d");
    std::vector<double> col(static_cast<size_t>(theta * P));
    const double* px = x.data().data();
    const double* pk = k.data().data();
    for (int64_t b = 0; b < B; ++b) {
        std::fill(col.begin(), col.end(), 0.0);
        // col = K^T * x_mat  with K viewed [Ci, theta], x_mat [Ci, P]
        mm_tn(col.data(), pk, px + b * Ci * P, Ci, theta, P);
        col2im_add(col.data(), Co, Ho, Wo, kh, kw, stride, padding, h, w,
                   out->data.data() + b * Co * Ho * Wo);
    }

    auto xn = x.node();
    auto kn = k.node();
    attach(out, {xn, kn},
           [xn, kn, B, Ci, h, w, Co, kh, kw, stride, padding, Ho, Wo, theta, P](Node& o) {
               if (xn->requires_grad) xn->ensure_grad();
               if (kn->requires_grad) kn->ensure_grad();
               std::vector<double> col(static_cast<size_t>(theta * P));
               for (int64_t b = 0; b < B; ++b) {
                   // go viewed as an image [Co, Ho, Wo]; its im2col at (s,p) has positions (h,w)
                   im2col(o.grad.data() + b * Co * Ho * Wo, Co, Ho, Wo, kh, kw, stride, padding, h,
                          w, col.data());
                   if (xn->requires_grad) {
                       // dx[ci, p] += sum_theta K[ci,theta] * col[theta,p]
                       mm_nn(xn->grad.data() + b * Ci * P, kn->data.data(), col.data(), Ci, theta, P);
                   }
                   if (kn->requires_grad) {
                       // dk[ci, theta] += sum_p x[ci,p] * col[theta,p]
                       mm_nt(kn->grad.data(), xn->data.data() + b * Ci * P, col.data(), Ci, P, theta);
                   }
               }
           });
    return Tensor(out);
}

Tensor avg_pool2d(const Tensor& x, int64_t kernel, int64_t stride) {
    if (x.dim() != 4) throw ShapeError("avg_pool2d: need [B,C,H,W], got " + shape_str(x.shape()));
    if (kernel < 1 || stride < 1) throw ShapeError("avg_pool2d: invalid kernel/stride");
    const int64_t B = x.size(0), C = x.size(1), H = x.size(2), W = x.size(3);
    if (kernel > H || kernel > W) {
        throw ShapeError("avg_pool2d: kernel " + std::to_string(kernel) + " larger than input " +
                         shape_str(x.shape()));
    }
    const int64_t Ho = (H - kernel) / stride + 1;
    const int64_t Wo = (W - kernel) / stride + 1;
    auto out = new_node(Shape{B, C, Ho, Wo}, "avg_pool2d");
    const double inv = 1.0 / static_cast<double>(kernel * kernel);
    const double* src = x.data().data();
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const double* img = src + bc * H * W;
        double* dst = out->data.data() + bc * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy) {
            for (int64_t ox = 0; ox < Wo; ++ox) {
                double acc = 0.0;
                for (int64_t dy = 0; dy < kernel; ++dy) {
                    const double* row = img + (oy * stride + dy) * W + ox * stride;
                    for (int64_t dx = 0; dx < kernel; ++dx) acc += row[dx];
                }
                dst[oy * Wo + ox] = acc * inv;
            }
        }
    }
    auto xn = x.node();
    attach(out, {xn}, [xn, B, C, H, W, Ho, Wo, kernel, stride, inv](Node& o) {
        xn->ensure_grad();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            double* gimg = xn->grad.data() + bc * H * W;
            const double* go = o.grad.data() + bc * Ho * Wo;
            for (int64_t oy = 0; oy < Ho; ++oy) {
                for (int64_t ox = 0; ox < Wo; ++ox) {
                    double g = go[oy * Wo + ox] * inv;
                    for (int64_t dy = 0; dy < kernel; ++dy) {
                        double* row = gimg + (oy * stride + dy) * W + ox * stride;
                        for (int64_t dx = 0; dx < kernel; ++dx) row[dx] += g;
                    }
                }
            }
        }
    });
    return Tensor(out);
}

// ---- softmax / layer norm -------------------------------------------------------

Tensor softmax(const Tensor& x, int64_t axis) {
    int64_t d = x.dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) throw ShapeError("softmax: axis out of range for " + shape_str(x.shape()));
    auto sp = split_axis(x.shape(), axis);
    auto out = new_node(x.shape(), "softmax");
    const double* src = x.data().data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            const double* base = src + o * sp.extent * sp.inner + i;
            double* dst = out->data.data() + o * sp.extent * sp.inner + i;
            double mx = base[0];
            for (int64_t e = 1; e < sp.extent; ++e) mx = std::max(mx, base[e * sp.inner]);
            double sum = 0.0;
            for (int64_t e = 0; e < sp.extent; ++e) {
                double v = std::exp(base[e * sp.inner] - mx);
                dst[e * sp.inner] = v;
                sum += v;
            }
            double inv = 1.0 / sum;
            for (int64_t e = 0; e < sp.extent; ++e) dst[e * sp.inner] *= inv;
        }
    }
    auto xn = x.node();
    attach(out, {xn}, [xn, sp](Node& o) {
        xn->ensure_grad();
        for (int64_t ou = 0; ou < sp.outer; ++ou) {
            for (int64_t i = 0; i < sp.inner; ++i) {
                const int64_t off = ou * sp.extent * sp.inner + i;
                const double* p = o.data.data() + off;
                const double* gy = o.grad.data() + off;
                double* gx = xn->grad.data() + off;
                double dot = 0.0;
                for (int64_t e = 0; e < sp.extent; ++e) dot += gy[e * sp.inner] * p[e * sp.inner];
                for (int64_t e = 0; e < sp.extent; ++e) {
                    gx[e * sp.inner] += p[e * sp.inner] * (gy[e * sp.inner] - dot);
                }
            }
        }
    });
    return Tensor(out);
}

Tensor masked_softmax(const Tensor& x, const Tensor& mask) {
    const Shape& xs = x.shape();
    const Shape& ms = mask.shape();
    if (ms.size() > xs.size()) throw ShapeError("masked_softmax: mask rank exceeds input rank");
    for (size_t i = 0; i < ms.size(); ++i) {
        if (ms[ms.size() - 1 - i] != xs[xs.size() - 1 - i]) {
            throw ShapeError("masked_softmax: mask " + shape_str(ms) +
                             " is not a trailing-shape of " + shape_str(xs));
        }
    }
    const int64_t extent = xs.back();
    const int64_t rows = x.numel() / extent;
    const int64_t mask_rows = mask.numel() / extent;

    auto out = new_node(xs, "masked_softmax");
    const double* src = x.data().data();
    const double* msk = mask.data().data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* base = src + r * extent;
        const double* mrow = msk + (r % mask_rows) * extent;
        double* dst = out->data.data() + r * extent;
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t e = 0; e < extent; ++e) {
            if (mrow[e] != 0.0) mx = std::max(mx, base[e]);
        }
        if (!std::isfinite(mx)) throw NumericError("masked_softmax: a row has no unmasked entries");
        double sum = 0.0;
        for (int64_t e = 0; e < extent; ++e) {
            if (mrow[e] != 0.0) {
                double v = std::exp(base[e] - mx);
                dst[e] = v;
                sum += v;
            } else {
                dst[e] = 0.0;
            }
        }
        double inv = 1.0 / sum;
        for (int64_t e = 0; e < extent; ++e) dst[e] *= inv;
    }
    auto xn = x.node();
    auto mn = mask.node();
    attach(out, {xn, mn}, [xn, rows, extent](Node& o) {
        xn->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double* p = o.data.data() + r * extent;
            const double* gy = o.grad.data() + r * extent;
            double* gx = xn->grad.data() + r * extent;
            double dot = 0.0;
            for (int64_t e = 0; e < extent; ++e) dot += gy[e] * p[e];
            for (int64_t e = 0; e < extent; ++e) gx[e] += p[e] * (gy[e] - dot);
        }
    });
    return Tensor(out);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int64_t axis, double eps) {
    int64_t d = x.dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) {
        throw ShapeError("layer_norm: axis out of range for " + shape_str(x.shape()));
    }
    const int64_t extent = x.shape()[static_cast<size_t>(axis)];
    if (gamma.numel() != extent || beta.numel() != extent) {
        throw ShapeError("layer_norm: gamma/beta must have " + std::to_string(extent) +
                         " entries for " + shape_str(x.shape()));
    }
    auto sp = split_axis(x.shape(), axis);
    auto out = new_node(x.shape(), "layer_norm");

    const int64_t slices = sp.outer * sp.inner;
    std::vector<double> mu(static_cast<size_t>(slices));
    std::vector<double> inv_std(static_cast<size_t>(slices));

    const double* src = x.data().data();
    const double* g = gamma.data().data();
    const double* bta = beta.data().data();
    const double inv_n = 1.0 / static_cast<double>(extent);
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            const double* base = src + o * sp.extent * sp.inner + i;
            double m = 0.0;
            for (int64_t e = 0; e < extent; ++e) m += base[e * sp.inner];
            m *= inv_n;
            double var = 0.0;
            for (int64_t e = 0; e < extent; ++e) {
                double dlt = base[e * sp.inner] - m;
                var += dlt * dlt;
            }
            var *= inv_n;
            double inv = 1.0 / std::sqrt(var + eps);
            mu[static_cast<size_t>(o * sp.inner + i)] = m;
            inv_std[static_cast<size_t>(o * sp.inner + i)] = inv;
            double* dst = out->data.data() + o * sp.extent * sp.inner + i;
            for (int64_t e = 0; e < extent; ++e) {
                dst[e * sp.inner] = g[e] * (base[e * sp.inner] - m) * inv + bta[e];
            }
        }
    }

    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    attach(out, {xn, gn, bn}, [xn, gn, bn, sp, mu, inv_std, extent, inv_n](Node& o) {
        if (xn->requires_grad) xn->ensure_grad();
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (int64_t ou = 0; ou < sp.outer; ++ou) {
            for (int64_t i = 0; i < sp.inner; ++i) {
                const int64_t off = ou * sp.extent * sp.inner + i;
                const double m = mu[static_cast<size_t>(ou * sp.inner + i)];
                const double inv = inv_std[static_cast<size_t>(ou * sp.inner + i)];
                const double* xv = xn->data.data() + off;
                const double* gy = o.grad.data() + off;
                double mean_g = 0.0, mean_gx = 0.0;
                for (int64_t e = 0; e < extent; ++e) {
                    double xhat = (xv[e * sp.inner] - m) * inv;
                    double gg = gy[e * sp.inner] * gn->data[static_cast<size_t>(e)];
                    mean_g += gg;
                    mean_gx += gg * xhat;
                }
                mean_g *= inv_n;
                mean_gx *= inv_n;
                for (int64_t e = 0; e < extent; ++e) {
                    double xhat = (xv[e * sp.inner] - m) * inv;
                    double gg = gy[e * sp.inner] * gn->data[static_cast<size_t>(e)];
                    if (xn->requires_grad) {
                        xn->grad[static_cast<size_t>(off + e * sp.inner)] +=
                            inv * (gg - mean_g - xhat * mean_gx);
                    }
                    if (gn->requires_grad) {
                        gn->grad[static_cast<size_t>(e)] += gy[e * sp.inner] * xhat;
                    }
                    if (bn->requires_grad) bn->grad[static_cast<size_t>(e)] += gy[e * sp.inner];
                }
            }
        }
    });
    return Tensor(out);
}

} // namespace tavp
