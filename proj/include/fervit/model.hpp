#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fervit/autodiff.hpp"
#include "fervit/image.hpp"
#include "fervit/tensor.hpp"

namespace fervit {

// ViT-style encoder: patch embedding + dropout + stacked pre-norm
// transformer-encoder layers. The reference preset mirrors the 1B-parameter
// backbone (40 layers); the toy preset is for desk-scale verification.
struct EncoderConfig {
    std::size_t image_height = 1024;
    std::size_t image_width = 768;
    std::size_t patch_size = 16;
    std::size_t embed_dim = 1536;
    std::size_t num_layers = 40;
    std::size_t num_heads = 24;
    double mlp_ratio = 4.0;
    double dropout_p = 0.0;

    std::size_t tokens_h() const { return image_height / patch_size; }
    std::size_t tokens_w() const { return image_width / patch_size; }
    std::size_t tokens() const { return tokens_h() * tokens_w(); }
    std::size_t head_dim() const { return embed_dim / num_heads; }
    std::size_t ffn_dim() const { return static_cast<std::size_t>(double(embed_dim) * mlp_ratio); }
    void validate() const;
};

// Attention-based classification head: cross-attention from fixed
// (non-learnable) group queries to encoder tokens, no query self-attention,
// FFN with residual + normalization, then a per-group linear map to
// ceil(num_classes / num_groups) logits each, truncated to num_classes.
struct DecoderConfig {
    std::size_t num_groups = 7;
    std::size_t num_classes = 7;
    std::size_t query_dim = 0;  // 0: match encoder embed_dim
    std::size_t ffn_hidden = 0; // 0: 2 * query_dim
    std::uint64_t query_seed = 0;

    std::size_t group_factor() const { return (num_classes + num_groups - 1) / num_groups; }
    void validate() const;
};

struct ModelConfig {
    EncoderConfig encoder;
    DecoderConfig decoder;

    std::size_t resolved_query_dim() const {
        return decoder.query_dim ? decoder.query_dim : encoder.embed_dim;
    }
    std::size_t resolved_ffn_hidden() const {
        return decoder.ffn_hidden ? decoder.ffn_hidden : 2 * resolved_query_dim();
    }
    void validate() const;
};

ModelConfig toy_model_config();
ModelConfig full_model_config();

// Parameter tallies derivable from configs alone (no allocation).
struct ParamCounts {
    std::size_t encoder = 0;
    std::size_t decoder = 0;
    std::size_t fixed_queries = 0;
    std::size_t trainable() const { return encoder + decoder; }
};

ParamCounts count_params(const ModelConfig& cfg);

// Intermediate activations exposed for inspection and tests.
struct ForwardTrace {
    std::vector<Tensor> encoder_attn; // per layer, (B*heads, N, N) softmax rows
    Tensor decoder_attn;              // (B, G, N)
    Tensor decoder_context;           // (B, G, Dq) attention output before projection
    Tensor decoder_values;            // (B, N, Dq) projected values
};

// Deterministic group-query initialization: standard normal under query_seed.
Tensor init_group_queries(const DecoderConfig& cfg, std::size_t query_dim);

// Encoder-decoder network holding all named parameters. Forward in eval mode
// is pure; training mode draws dropout masks from the caller's RNG.
class Model {
public:
    explicit Model(ModelConfig cfg, std::uint64_t init_seed = 42);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    const ModelConfig& config() const { return cfg_; }

    // Full network: patch embed -> dropout -> encoder layers -> decoder head.
    ad::Val forward(ad::Builder& b, const std::vector<ImageTensor>& images, bool training,
                    Rng& dropout_rng, ForwardTrace* trace = nullptr);

    // Eval-mode logits (B, num_classes); deterministic.
    Tensor forward_logits(const std::vector<ImageTensor>& images, ForwardTrace* trace = nullptr);

    // Encoder stack only, exposed for shape/identity tests: (B,N,D) -> (B,N,D).
    ad::Val encoder_forward(ad::Builder& b, ad::Val tokens, ForwardTrace* trace = nullptr);

    // Decoder head only: (B,N,D) tokens -> (B,num_classes) logits.
    ad::Val decoder_forward(ad::Builder& b, ad::Val tokens, ForwardTrace* trace = nullptr);

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    Parameter& find(const std::string& name);
    const Parameter& group_queries() const;

    // Optimizer groups. freeze_layers freezes the patch embedding, the
    // positional table, and the first freeze_layers encoder layers.
    std::vector<Parameter*> encoder_trainable(std::size_t freeze_layers = 0);
    std::vector<Parameter*> decoder_trainable();

    void zero_grads();
    std::size_t trainable_param_count() const;
    std::string describe() const;

    std::map<std::string, Tensor> snapshot() const;
    void restore(const std::map<std::string, Tensor>& values);

    void save(const std::string& path) const;
    static Model load_file(const std::string& path);

    // Replace encoder parameters from a weight archive. Decoder entries are
    // ignored; every encoder parameter must be present (MissingParameter) and
    // shape-compatible (ShapeMismatch, all offenders listed). A positional
    // table whose grid differs only in token count is bilinearly resized.
    void load_backbone_weights(const std::string& path);

private:
    Parameter& add_param(const std::string& name, Tensor value, bool trainable = true);
    Tensor extract_patches(const std::vector<ImageTensor>& images) const;

    ModelConfig cfg_;
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t> index_;
};

// Bilinear resize of a positional table laid out on a (th, tw) token grid.
Tensor resize_pos_grid(const Tensor& pos, std::size_t th, std::size_t tw, std::size_t out_th,
                       std::size_t out_tw);

} // namespace fervit
