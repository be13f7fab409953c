#pragma once
// NCHW tensor container and the GEMM kernels behind conv/FC layers. Every
// kernel accumulates each output element in a fixed order, so results are
// bitwise identical regardless of thread count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ictus::nn {

template <class T>
struct Tensor {
  std::vector<T> data;
  int n{0}, c{0}, h{0}, w{0};

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    data.assign(static_cast<size_t>(n_) * c_ * h_ * w_, T(0));
  }
  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  int plane() const { return h * w; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T* sample(int i) { return data.data() + static_cast<size_t>(i) * c * h * w; }
  const T* sample(int i) const { return data.data() + static_cast<size_t>(i) * c * h * w; }

  T& at(int i, int j, int y, int x) {
    return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  T at(int i, int j, int y, int x) const {
    return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
};

// ---------------------------------------------------------------------------
// C[M x N] = A[M x K] * B[K x N], all row-major, C overwritten.
// Threads own disjoint column tiles; per element the k accumulation order is
// fixed (kb tiles ascending, k ascending inside), so results do not depend on
// the thread count. Four C-row streams per pass; wider unrolls overflow the
// vectorizer's data-reference budget and fall back to scalar code.
// ---------------------------------------------------------------------------
template <class T>
void gemm_ab(const T* __restrict A, const T* __restrict B, T* __restrict C, int M, int K, int N) {
  constexpr int JB = 1024;
  constexpr int KB = 128;
#pragma omp parallel for schedule(static)
  for (int jb = 0; jb < N; jb += JB) {
    const int jn = std::min(JB, N - jb);
    for (int i = 0; i < M; ++i) std::fill_n(C + static_cast<size_t>(i) * N + jb, jn, T(0));
    for (int kb = 0; kb < K; kb += KB) {
      const int kn = std::min(KB, K - kb);
      int i = 0;
      for (; i + 4 <= M; i += 4) {
        T* __restrict c0 = C + static_cast<size_t>(i + 0) * N + jb;
        T* __restrict c1 = C + static_cast<size_t>(i + 1) * N + jb;
        T* __restrict c2 = C + static_cast<size_t>(i + 2) * N + jb;
        T* __restrict c3 = C + static_cast<size_t>(i + 3) * N + jb;
        for (int k = kb; k < kb + kn; ++k) {
          const T a0 = A[static_cast<size_t>(i + 0) * K + k];
          const T a1 = A[static_cast<size_t>(i + 1) * K + k];
          const T a2 = A[static_cast<size_t>(i + 2) * K + k];
          const T a3 = A[static_cast<size_t>(i + 3) * K + k];
          const T* __restrict b = B + static_cast<size_t>(k) * N + jb;
          for (int j = 0; j < jn; ++j) {
            const T bj = b[j];
            c0[j] += a0 * bj;
            c1[j] += a1 * bj;
            c2[j] += a2 * bj;
            c3[j] += a3 * bj;
          }
        }
      }
      for (; i < M; ++i) {
        T* __restrict c0 = C + static_cast<size_t>(i) * N + jb;
        for (int k = kb; k < kb + kn; ++k) {
          const T a0 = A[static_cast<size_t>(i) * K + k];
          const T* __restrict b = B + static_cast<size_t>(k) * N + jb;
          for (int j = 0; j < jn; ++j) c0[j] += a0 * b[j];
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// C[M x N] = A[M x P] * B[N x P]^T, i.e. C[m][n] = sum_p A[m][p] * B[n][p].
// The reduction runs over 16 independent lanes combined in a fixed order, so
// it vectorizes without reassociating the serial sum.
// ---------------------------------------------------------------------------
template <class T>
void gemm_abt(const T* __restrict A, const T* __restrict B, T* __restrict C, int M, int P, int N) {
  constexpr int PB = 2048;
  constexpr int NB = 128;
  constexpr int L = 16;
  for (int nb = 0; nb < N; nb += NB) {
    const int nn = std::min(NB, N - nb);
    for (int pb = 0; pb < P; pb += PB) {
      const int pn = std::min(PB, P - pb);
      const bool first = pb == 0;
#pragma omp parallel for schedule(static)
      for (int m = 0; m < M; ++m) {
        const T* __restrict arow = A + static_cast<size_t>(m) * P + pb;
        for (int n = nb; n < nb + nn; ++n) {
          const T* __restrict brow = B + static_cast<size_t>(n) * P + pb;
          T lanes[L] = {};
          int p = 0;
          for (; p + L <= pn; p += L) {
            for (int l = 0; l < L; ++l) lanes[l] += arow[p + l] * brow[p + l];
          }
          T acc = T(0);
          for (int l = 0; l < L; ++l) acc += lanes[l];
          for (; p < pn; ++p) acc += arow[p] * brow[p];
          T& out = C[static_cast<size_t>(m) * N + n];
          out = first ? acc : out + acc;
        }
      }
    }
  }
}

template <class T>
void transpose(const T* A, T* At, int M, int N) {
  constexpr int B = 64;
  for (int ib = 0; ib < M; ib += B) {
    for (int jb = 0; jb < N; jb += B) {
      const int in = std::min(B, M - ib);
      const int jn = std::min(B, N - jb);
      for (int i = 0; i < in; ++i) {
        for (int j = 0; j < jn; ++j) {
          At[static_cast<size_t>(jb + j) * M + (ib + i)] =
              A[static_cast<size_t>(ib + i) * N + (jb + j)];
        }
      }
    }
  }
}

}  // namespace ictus::nn
