#pragma once

#include "wavlink/tensor.hpp"

namespace wavlink::ops {

// Dense 2-D product a[m,k] * b[k,n] -> [m,n].
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

TensorPtr transpose(const TensorPtr& a);

// Elementwise add. b may also be a row vector [n] or [1,n] broadcast over
// the rows of a[m,n] (bias add).
TensorPtr add(const TensorPtr& a, const TensorPtr& b);

TensorPtr mul(const TensorPtr& a, const TensorPtr& b);

TensorPtr scale(const TensorPtr& a, double c);

// out = s * a + b where s and b are scalar [1] tensors; b may be null.
TensorPtr scalar_affine(const TensorPtr& a, const TensorPtr& s, const TensorPtr& b);

TensorPtr exp_elem(const TensorPtr& a);

// exact erf-based GELU
TensorPtr gelu(const TensorPtr& a);

// log(1 + exp(x)) in the overflow-safe form
TensorPtr softplus(const TensorPtr& a);

// Per-row normalization over the last axis, scaled by gamma and shifted by
// beta (both [D]).
TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gamma,
                    const TensorPtr& beta, double eps);

// Row-wise softmax; mask, when given, is an additive constant of the same
// shape (0 for visible, large negative for blocked).
TensorPtr softmax_rows(const TensorPtr& x, const TensorPtr& mask);

// Mean over rows of -log softmax(logits)[target], stabilized by row-max
// subtraction. targets.size() must equal the row count.
TensorPtr softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& targets);

// Rows of table[V,D] gathered by ids -> [L,D]; backward scatter-adds.
TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids);

TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);

TensorPtr slice_cols(const TensorPtr& x, int start, int len);

// Single row r of x as a [1,D] tensor.
TensorPtr select_row(const TensorPtr& x, int r);

// Divides each row by its l2 norm; throws DegenerateEmbeddingError on a
// zero-norm row.
TensorPtr l2_normalize_rows(const TensorPtr& x);

TensorPtr sum_all(const TensorPtr& x);
TensorPtr mean_all(const TensorPtr& x);

// 1-D convolution over time. x[T,Cin], w[Cout,Cin,K], b[Cout]; symmetric
// zero padding of K/2, output [ceil(T/stride), Cout].
TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride);

} // namespace wavlink::ops
