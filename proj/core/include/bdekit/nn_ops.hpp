#ifndef BDEKIT_NN_OPS_HPP
#define BDEKIT_NN_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bdekit/tensor.hpp"

namespace bdekit::nn {

namespace detail {

template <typename T>
std::shared_ptr<Node<T>> make_result(Shape4 shape,
                                     std::vector<std::shared_ptr<Node<T>>> parents) {
    auto node = std::make_shared<Node<T>>();
    node->shape = shape;
    node->value.assign(shape.numel(), T(0));
    for (const auto& p : parents)
        node->requires_grad = node->requires_grad || p->requires_grad;
    node->parents = std::move(parents);
    return node;
}

} // namespace detail

/// 2-D cross-correlation with stride 1 and zero padding. `weight` is
/// (out_channels, in_channels, kh, kw); `bias` is (out_channels, 1, 1, 1).
/// The kernel size comes from the weight shape.
template <typename T>
Tensor4<T> conv2d(const Tensor4<T>& x, const Tensor4<T>& weight,
                  const Tensor4<T>& bias, int padding) {
    const Shape4 xs = x.shape(), ws = weight.shape();
    if (ws.c != xs.c)
        throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                         " input channels, tensor has " + std::to_string(xs.c));
    if (bias.shape() != Shape4{ws.n, 1, 1, 1})
        throw ShapeError("conv2d: bias shape " + bias.shape().str() +
                         " does not match " + std::to_string(ws.n) + " filters");
    if (padding < 0) throw ShapeError("conv2d: negative padding");
    const int kh = ws.h, kw = ws.w, pad = padding;
    const int hout = xs.h + 2 * pad - kh + 1;
    const int wout = xs.w + 2 * pad - kw + 1;
    if (hout <= 0 || wout <= 0)
        throw ShapeError("conv2d: kernel larger than padded input");

    auto node = detail::make_result<T>({xs.n, ws.n, hout, wout},
                                       {x.node(), weight.node(), bias.node()});
    const T* xv = x.values().data();
    const T* wv = weight.values().data();
    const T* bv = bias.values().data();
    T* out = node->value.data();
    const int cin = xs.c, hin = xs.h, win = xs.w, cout = ws.n, n = xs.n;

    // One shifted-row AXPY per (ky,kx) tap; the inner ox loop is unit-stride
    // on both arrays so the compiler can vectorize it.
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int oc = 0; oc < cout; ++oc) {
            T* oplane = out + (static_cast<size_t>(in) * cout + oc) * hout * wout;
            std::fill(oplane, oplane + static_cast<size_t>(hout) * wout, bv[oc]);
            for (int ic = 0; ic < cin; ++ic) {
                const T* xplane =
                    xv + (static_cast<size_t>(in) * cin + ic) * hin * win;
                const T* wk =
                    wv + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    const int oy_lo = std::max(0, pad - ky);
                    const int oy_hi = std::min(hout, hin + pad - ky);
                    for (int kx = 0; kx < kw; ++kx) {
                        const T tap = wk[ky * kw + kx];
                        const int ox_lo = std::max(0, pad - kx);
                        const int ox_hi = std::min(wout, win + pad - kx);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const T* xrow =
                                xplane + static_cast<size_t>(oy + ky - pad) * win +
                                (kx - pad);
                            T* orow = oplane + static_cast<size_t>(oy) * wout;
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                orow[ox] += tap * xrow[ox];
                        }
                    }
                }
            }
        }
    }

    if (node->requires_grad) {
        node->backprop = [pad](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            auto& wn = *self.parents[1];
            auto& bn = *self.parents[2];
            const Shape4 xs = xn.shape, ws = wn.shape;
            const int kh = ws.h, kw = ws.w, cin = xs.c, cout = ws.n;
            const int hin = xs.h, win = xs.w;
            const int hout = self.shape.h, wout = self.shape.w;
            const int n = xs.n;
            const T* g = self.grad.data();

            if (bn.requires_grad) {
                bn.ensure_grad();
                for (int oc = 0; oc < cout; ++oc) {
                    T acc = T(0);
                    for (int in = 0; in < n; ++in) {
                        const T* gplane =
                            g + (static_cast<size_t>(in) * cout + oc) * hout * wout;
                        for (size_t i = 0; i < static_cast<size_t>(hout) * wout; ++i)
                            acc += gplane[i];
                    }
                    bn.grad[oc] += acc;
                }
            }

            if (wn.requires_grad) {
                wn.ensure_grad();
                T* gw = wn.grad.data();
                const T* xv = xn.value.data();
#pragma omp parallel for collapse(2) schedule(static)
                for (int oc = 0; oc < cout; ++oc) {
                    for (int ic = 0; ic < cin; ++ic) {
                        T* gk = gw + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            for (int kx = 0; kx < kw; ++kx) {
                                const int oy_lo = std::max(0, pad - ky);
                                const int oy_hi = std::min(hout, hin + pad - ky);
                                const int ox_lo = std::max(0, pad - kx);
                                const int ox_hi = std::min(wout, win + pad - kx);
                                // Four fixed-order partial sums hide the FMA
                                // latency of a single accumulator chain; the
                                // combine order is deterministic.
                                T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0);
                                for (int in = 0; in < n; ++in) {
                                    const T* gplane =
                                        g + (static_cast<size_t>(in) * cout + oc) *
                                                hout * wout;
                                    const T* xplane =
                                        xv + (static_cast<size_t>(in) * cin + ic) *
                                                 hin * win;
                                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                                        const T* grow =
                                            gplane + static_cast<size_t>(oy) * wout;
                                        const T* xrow =
                                            xplane +
                                            static_cast<size_t>(oy + ky - pad) * win +
                                            (kx - pad);
                                        int ox = ox_lo;
                                        for (; ox + 4 <= ox_hi; ox += 4) {
                                            a0 += grow[ox] * xrow[ox];
                                            a1 += grow[ox + 1] * xrow[ox + 1];
                                            a2 += grow[ox + 2] * xrow[ox + 2];
                                            a3 += grow[ox + 3] * xrow[ox + 3];
                                        }
                                        for (; ox < ox_hi; ++ox)
                                            a0 += grow[ox] * xrow[ox];
                                    }
                                }
                                gk[ky * kw + kx] += ((a0 + a1) + (a2 + a3));
                            }
                        }
                    }
                }
            }

            if (xn.requires_grad) {
                xn.ensure_grad();
                T* gx = xn.grad.data();
                const T* wv = wn.value.data();
#pragma omp parallel for collapse(2) schedule(static)
                for (int in = 0; in < n; ++in) {
                    for (int ic = 0; ic < cin; ++ic) {
                        T* gxplane =
                            gx + (static_cast<size_t>(in) * cin + ic) * hin * win;
                        for (int oc = 0; oc < cout; ++oc) {
                            const T* gplane =
                                g + (static_cast<size_t>(in) * cout + oc) * hout *
                                        wout;
                            const T* wk =
                                wv + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
                            for (int ky = 0; ky < kh; ++ky) {
                                const int oy_lo = std::max(0, pad - ky);
                                const int oy_hi = std::min(hout, hin + pad - ky);
                                for (int kx = 0; kx < kw; ++kx) {
                                    const T tap = wk[ky * kw + kx];
                                    const int ox_lo = std::max(0, pad - kx);
                                    const int ox_hi = std::min(wout, win + pad - kx);
                                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                                        const T* grow =
                                            gplane + static_cast<size_t>(oy) * wout;
                                        T* gxrow =
                                            gxplane +
                                            static_cast<size_t>(oy + ky - pad) * win +
                                            (kx - pad);
                                        for (int ox = ox_lo; ox < ox_hi; ++ox)
                                            gxrow[ox] += tap * grow[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

template <typename T>
Tensor4<T> relu(const Tensor4<T>& x) {
    auto node = detail::make_result<T>(x.shape(), {x.node()});
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i)
        node->value[i] = xv[i] > T(0) ? xv[i] : T(0);
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                if (xn.value[i] > T(0)) xn.grad[i] += self.grad[i];
        };
    }
    return Tensor4<T>(std::move(node));
}

template <typename T>
Tensor4<T> sigmoid(const Tensor4<T>& x) {
    auto node = detail::make_result<T>(x.shape(), {x.node()});
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) {
        // evaluate via exp of a non-positive argument to avoid overflow
        const T v = xv[i];
        if (v >= T(0)) {
            node->value[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            node->value[i] = e / (T(1) + e);
        }
    }
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) {
                const T y = self.value[i];
                xn.grad[i] += self.grad[i] * y * (T(1) - y);
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// 2x2 max pooling with stride 2. Height and width must be even so the
/// encoder/decoder shapes stay in lockstep.
template <typename T>
Tensor4<T> maxpool2(const Tensor4<T>& x) {
    const Shape4 xs = x.shape();
    if (xs.h % 2 != 0 || xs.w % 2 != 0)
        throw ShapeError("maxpool2 requires even height and width, got " +
                         xs.str());
    auto node = detail::make_result<T>({xs.n, xs.c, xs.h / 2, xs.w / 2},
                                       {x.node()});
    const int planes = xs.n * xs.c, hin = xs.h, win = xs.w;
    const int hout = hin / 2, wout = win / 2;
    const T* xv = x.values().data();
    T* out = node->value.data();
    // remember which input each output came from; ties pick the first in
    // row-major order so the backward pass is deterministic
    auto argmax = std::make_shared<std::vector<uint32_t>>(node->value.size());
    uint32_t* am = argmax->data();
    for (int p = 0; p < planes; ++p) {
        const T* xplane = xv + static_cast<size_t>(p) * hin * win;
        for (int oy = 0; oy < hout; ++oy) {
            for (int ox = 0; ox < wout; ++ox) {
                uint32_t best = static_cast<uint32_t>(2 * oy * win + 2 * ox);
                T bestv = xplane[best];
                const uint32_t cand[3] = {
                    best + 1, best + static_cast<uint32_t>(win),
                    best + static_cast<uint32_t>(win) + 1};
                for (uint32_t idx : cand) {
                    if (xplane[idx] > bestv) {
                        bestv = xplane[idx];
                        best = idx;
                    }
                }
                const size_t o = static_cast<size_t>(p) * hout * wout +
                                 static_cast<size_t>(oy) * wout + ox;
                out[o] = bestv;
                am[o] = best;
            }
        }
    }
    if (node->requires_grad) {
        node->backprop = [argmax, hin, win, hout, wout](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            const uint32_t* am = argmax->data();
            const int planes = self.shape.n * self.shape.c;
            for (int p = 0; p < planes; ++p) {
                T* gxplane = xn.grad.data() + static_cast<size_t>(p) * hin * win;
                const size_t base = static_cast<size_t>(p) * hout * wout;
                for (size_t i = 0; i < static_cast<size_t>(hout) * wout; ++i)
                    gxplane[am[base + i]] += self.grad[base + i];
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// Rearranges (n, c*r^2, h, w) into (n, c, h*r, w*r). Channel block
/// c*r^2 + dy*r + dx lands on output offset (dy, dx) within each r x r cell.
template <typename T>
Tensor4<T> pixel_shuffle(const Tensor4<T>& x, int factor = 2) {
    const Shape4 xs = x.shape();
    const int r = factor;
    if (r < 1 || xs.c % (r * r) != 0)
        throw ShapeError("pixel_shuffle: channels " + std::to_string(xs.c) +
                         " not divisible by " + std::to_string(r * r));
    const int cout = xs.c / (r * r);
    auto node = detail::make_result<T>({xs.n, cout, xs.h * r, xs.w * r},
                                       {x.node()});
    const T* xv = x.values().data();
    T* out = node->value.data();
    const int hin = xs.h, win = xs.w, hout = hin * r, wout = win * r;
    for (int in = 0; in < xs.n; ++in) {
        for (int oc = 0; oc < cout; ++oc) {
            for (int dy = 0; dy < r; ++dy) {
                for (int dx = 0; dx < r; ++dx) {
                    const int ic = oc * r * r + dy * r + dx;
                    const T* xplane =
                        xv + (static_cast<size_t>(in) * xs.c + ic) * hin * win;
                    T* oplane =
                        out + (static_cast<size_t>(in) * cout + oc) * hout * wout;
                    for (int y = 0; y < hin; ++y) {
                        const T* xrow = xplane + static_cast<size_t>(y) * win;
                        T* orow = oplane +
                                  static_cast<size_t>(y * r + dy) * wout + dx;
                        for (int xcol = 0; xcol < win; ++xcol)
                            orow[static_cast<size_t>(xcol) * r] = xrow[xcol];
                    }
                }
            }
        }
    }
    if (node->requires_grad) {
        node->backprop = [r](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            const Shape4 xs = xn.shape;
            const int cout = self.shape.c, hin = xs.h, win = xs.w;
            const int hout = self.shape.h, wout = self.shape.w;
            const T* g = self.grad.data();
            for (int in = 0; in < xs.n; ++in) {
                for (int oc = 0; oc < cout; ++oc) {
                    for (int dy = 0; dy < r; ++dy) {
                        for (int dx = 0; dx < r; ++dx) {
                            const int ic = oc * r * r + dy * r + dx;
                            T* gxplane =
                                xn.grad.data() +
                                (static_cast<size_t>(in) * xs.c + ic) * hin * win;
                            const T* gplane =
                                g + (static_cast<size_t>(in) * cout + oc) * hout *
                                        wout;
                            for (int y = 0; y < hin; ++y) {
                                T* gxrow = gxplane + static_cast<size_t>(y) * win;
                                const T* grow =
                                    gplane +
                                    static_cast<size_t>(y * r + dy) * wout + dx;
                                for (int xcol = 0; xcol < win; ++xcol)
                                    gxrow[xcol] += grow[static_cast<size_t>(xcol) * r];
                            }
                        }
                    }
                }
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// Inverse of pixel_shuffle: (n, c, h*r, w*r) -> (n, c*r^2, h, w).
template <typename T>
Tensor4<T> space_to_depth(const Tensor4<T>& x, int factor = 2) {
    const Shape4 xs = x.shape();
    const int r = factor;
    if (r < 1 || xs.h % r != 0 || xs.w % r != 0)
        throw ShapeError("space_to_depth: dims " + xs.str() +
                         " not divisible by " + std::to_string(r));
    const int hout = xs.h / r, wout = xs.w / r, cout = xs.c * r * r;
    auto node = detail::make_result<T>({xs.n, cout, hout, wout}, {x.node()});
    const T* xv = x.values().data();
    T* out = node->value.data();
    for (int in = 0; in < xs.n; ++in) {
        for (int ic = 0; ic < xs.c; ++ic) {
            const T* xplane =
                xv + (static_cast<size_t>(in) * xs.c + ic) * xs.h * xs.w;
            for (int dy = 0; dy < r; ++dy) {
                for (int dx = 0; dx < r; ++dx) {
                    const int oc = ic * r * r + dy * r + dx;
                    T* oplane =
                        out + (static_cast<size_t>(in) * cout + oc) * hout * wout;
                    for (int y = 0; y < hout; ++y) {
                        const T* xrow =
                            xplane + static_cast<size_t>(y * r + dy) * xs.w + dx;
                        T* orow = oplane + static_cast<size_t>(y) * wout;
                        for (int xcol = 0; xcol < wout; ++xcol)
                            orow[xcol] = xrow[static_cast<size_t>(xcol) * r];
                    }
                }
            }
        }
    }
    if (node->requires_grad) {
        node->backprop = [r](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            const Shape4 xs = xn.shape;
            const int hout = self.shape.h, wout = self.shape.w;
            const int cout = self.shape.c;
            for (int in = 0; in < xs.n; ++in) {
                for (int ic = 0; ic < xs.c; ++ic) {
                    T* gxplane =
                        xn.grad.data() +
                        (static_cast<size_t>(in) * xs.c + ic) * xs.h * xs.w;
                    for (int dy = 0; dy < r; ++dy) {
                        for (int dx = 0; dx < r; ++dx) {
                            const int oc = ic * r * r + dy * r + dx;
                            const T* gplane =
                                self.grad.data() +
                                (static_cast<size_t>(in) * cout + oc) * hout * wout;
                            for (int y = 0; y < hout; ++y) {
                                T* gxrow =
                                    gxplane +
                                    static_cast<size_t>(y * r + dy) * xs.w + dx;
                                const T* grow =
                                    gplane + static_cast<size_t>(y) * wout;
                                for (int xcol = 0; xcol < wout; ++xcol)
                                    gxrow[static_cast<size_t>(xcol) * r] +=
                                        grow[xcol];
                            }
                        }
                    }
                }
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    const Shape4 as = a.shape(), bs = b.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw ShapeError("concat_channels: shapes " + as.str() + " and " +
                         bs.str() + " differ outside the channel axis");
    auto node = detail::make_result<T>({as.n, as.c + bs.c, as.h, as.w},
                                       {a.node(), b.node()});
    const size_t plane = static_cast<size_t>(as.h) * as.w;
    const size_t an = static_cast<size_t>(as.c) * plane;
    const size_t bn = static_cast<size_t>(bs.c) * plane;
    for (int in = 0; in < as.n; ++in) {
        std::copy_n(a.values().data() + in * an, an,
                    node->value.data() + in * (an + bn));
        std::copy_n(b.values().data() + in * bn, bn,
                    node->value.data() + in * (an + bn) + an);
    }
    if (node->requires_grad) {
        node->backprop = [an, bn](detail::Node<T>& self) {
            auto& na = *self.parents[0];
            auto& nb = *self.parents[1];
            const int n = self.shape.n;
            if (na.requires_grad) {
                na.ensure_grad();
                for (int in = 0; in < n; ++in)
                    for (size_t i = 0; i < an; ++i)
                        na.grad[in * an + i] += self.grad[in * (an + bn) + i];
            }
            if (nb.requires_grad) {
                nb.ensure_grad();
                for (int in = 0; in < n; ++in)
                    for (size_t i = 0; i < bn; ++i)
                        nb.grad[in * bn + i] += self.grad[in * (an + bn) + an + i];
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ShapeError("add: shapes " + a.shape().str() + " and " +
                         b.shape().str() + " differ");
    auto node = detail::make_result<T>(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->value[i] = av[i] + bv[i];
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            for (int p = 0; p < 2; ++p) {
                auto& par = *self.parents[p];
                if (!par.requires_grad) continue;
                par.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i)
                    par.grad[i] += self.grad[i];
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// x * c for a plain constant (not differentiated with respect to c).
template <typename T>
Tensor4<T> scale(const Tensor4<T>& x, T constant) {
    auto node = detail::make_result<T>(x.shape(), {x.node()});
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) node->value[i] = xv[i] * constant;
    if (node->requires_grad) {
        node->backprop = [constant](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                xn.grad[i] += constant * self.grad[i];
        };
    }
    return Tensor4<T>(std::move(node));
}

/// x * s where s is a learnable 1-element tensor (a trainable step size).
template <typename T>
Tensor4<T> scale_by(const Tensor4<T>& x, const Tensor4<T>& s) {
    if (s.numel() != 1)
        throw ShapeError("scale_by expects a 1-element scale, shape " +
                         s.shape().str());
    auto node = detail::make_result<T>(x.shape(), {x.node(), s.node()});
    const T sv = s.values()[0];
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) node->value[i] = xv[i] * sv;
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            auto& sn = *self.parents[1];
            const T sv = sn.value[0];
            if (xn.requires_grad) {
                xn.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i)
                    xn.grad[i] += sv * self.grad[i];
            }
            if (sn.requires_grad) {
                sn.ensure_grad();
                T acc = T(0);
                for (size_t i = 0; i < self.grad.size(); ++i)
                    acc += self.grad[i] * xn.value[i];
                sn.grad[0] += acc;
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// Elementwise product of two same-shape tensors.
template <typename T>
Tensor4<T> mul(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ShapeError("mul: shapes " + a.shape().str() + " and " +
                         b.shape().str() + " differ");
    auto node = detail::make_result<T>(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->value[i] = av[i] * bv[i];
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& na = *self.parents[0];
            auto& nb = *self.parents[1];
            if (na.requires_grad) {
                na.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i)
                    na.grad[i] += self.grad[i] * nb.value[i];
            }
            if (nb.requires_grad) {
                nb.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i)
                    nb.grad[i] += self.grad[i] * na.value[i];
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

/// Clamp to [0,1]. Gradient passes only where the input is strictly inside
/// the interval.
template <typename T>
Tensor4<T> clamp01(const Tensor4<T>& x) {
    auto node = detail::make_result<T>(x.shape(), {x.node()});
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i)
        node->value[i] = std::clamp(xv[i], T(0), T(1));
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                if (xn.value[i] > T(0) && xn.value[i] < T(1))
                    xn.grad[i] += self.grad[i];
        };
    }
    return Tensor4<T>(std::move(node));
}

/// Mean absolute error over all elements, returned as a scalar tensor.
template <typename T>
Tensor4<T> l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
    if (!(pred.shape() == target.shape()))
        throw ShapeError("l1_loss: shapes " + pred.shape().str() + " and " +
                         target.shape().str() + " differ");
    auto node =
        detail::make_result<T>({1, 1, 1, 1}, {pred.node(), target.node()});
    const auto& pv = pred.values();
    const auto& tv = target.values();
    T acc = T(0);
    for (size_t i = 0; i < pv.size(); ++i) acc += std::abs(pv[i] - tv[i]);
    node->value[0] = acc / static_cast<T>(pv.size());
    if (node->requires_grad) {
        node->backprop = [](detail::Node<T>& self) {
            auto& pn = *self.parents[0];
            auto& tn = *self.parents[1];
            const T g = self.grad[0] / static_cast<T>(pn.value.size());
            for (int side = 0; side < 2; ++side) {
                auto& par = side == 0 ? pn : tn;
                const T sgn = side == 0 ? T(1) : T(-1);
                if (!par.requires_grad) continue;
                par.ensure_grad();
                for (size_t i = 0; i < pn.value.size(); ++i) {
                    const T d = pn.value[i] - tn.value[i];
                    if (d > T(0))
                        par.grad[i] += sgn * g;
                    else if (d < T(0))
                        par.grad[i] -= sgn * g;
                }
            }
        };
    }
    return Tensor4<T>(std::move(node));
}

} // namespace bdekit::nn

#endif
