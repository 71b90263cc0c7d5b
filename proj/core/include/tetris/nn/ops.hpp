#pragma once

#include <span>

// Forward and backward kernels for the layers the network needs. Backward
// functions accumulate (+=) into the gradient buffers they are given; an
// empty span skips that gradient.
namespace tetris::nn::ops {

struct ConvShape {
    int batch = 1;
    int in_channels = 1;
    int height = 1;
    int width = 1;
    int filters = 1;
    int kernel_rows = 1;
    int kernel_cols = 1;
    int dilation = 1;

    int out_height() const { return height - dilation * (kernel_rows - 1); }
    int out_width() const { return width - dilation * (kernel_cols - 1); }
};

// Valid (unpadded) dilated cross-correlation plus bias.
// input [B,C,H,W], weight [F,C,kr,kc], bias [F] -> out [B,F,H',W'].
void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_input, std::span<double> grad_weight,
                     std::span<double> grad_bias);

// Fused branch: pooled[b] = mean over (f, y, x) of act(conv(input)[b,f,y,x]).
// `activated` [B,F,H',W'] receives act(conv) for the backward pass. With
// tanh == false the activation is the identity.
void conv_pool_forward(const ConvShape& s, bool tanh, std::span<const double> input, std::span<const double> weight,
                       std::span<const double> bias, std::span<double> activated, std::span<double> pooled);
void conv_pool_backward(const ConvShape& s, bool tanh, std::span<const double> input, std::span<const double> weight,
                        std::span<const double> activated, std::span<const double> grad_pooled,
                        std::span<double> grad_input, std::span<double> grad_weight, std::span<double> grad_bias);

// x [B,in], weight [out,in], bias [out] -> y [B,out].
void dense_forward(int batch, int in, int out, std::span<const double> x, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> y);
void dense_backward(int batch, int in, int out, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> grad_y, std::span<double> grad_x, std::span<double> grad_weight,
                    std::span<double> grad_bias);

void tanh_forward(std::span<const double> x, std::span<double> y);
// Uses the forward output y: dx += dy * (1 - y^2).
void tanh_backward(std::span<const double> y, std::span<const double> grad_y, std::span<double> grad_x);

// x [B, n] -> y [B], the mean of each row.
void row_mean_forward(int batch, int n, std::span<const double> x, std::span<double> y);
void row_mean_backward(int batch, int n, std::span<const double> grad_y, std::span<double> grad_x);

// Mean squared error over the batch.
double mse_forward(std::span<const double> pred, std::span<const double> target);
void mse_backward(std::span<const double> pred, std::span<const double> target, double grad_loss,
                  std::span<double> grad_pred);

// (1/B) sum_b sum_k lambda_k |a_bk| for a [B,K]. Subgradient of |.| at 0 is 0.
double l1_forward(int batch, std::span<const double> a, std::span<const double> lambda);
void l1_backward(int batch, std::span<const double> a, std::span<const double> lambda, double grad_loss,
                 std::span<double> grad_a);

} // namespace tetris::nn::ops
