#include "fervit/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fervit/errors.hpp"
#include "fervit/serialize.hpp"

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace fervit {

void EncoderConfig::validate() const {
    if (patch_size == 0 || image_height % patch_size != 0 || image_width % patch_size != 0)
        raise(Errc::dimension_mismatch, "image dims must be divisible by patch_size");
    if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0)
        raise(Errc::dimension_mismatch, "embed_dim must be divisible by num_heads");
    if (!(mlp_ratio > 0.0)) raise(Errc::config_error, "mlp_ratio must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        raise(Errc::config_error, "dropout_p must be in [0,1)");
}

void DecoderConfig::validate() const {
    if (num_classes == 0) raise(Errc::config_error, "num_classes must be positive");
    if (num_groups == 0 || num_groups > num_classes)
        raise(Errc::config_error, "num_groups must be in 1..num_classes");
}

void ModelConfig::validate() const {
    encoder.validate();
    decoder.validate();
}

ModelConfig toy_model_config() {
    ModelConfig cfg;
    cfg.encoder.image_height = 32;
    cfg.encoder.image_width = 32;
    cfg.encoder.patch_size = 8;
    cfg.encoder.embed_dim = 16;
    cfg.encoder.num_layers = 2;
    cfg.encoder.num_heads = 2;
    cfg.encoder.mlp_ratio = 2.0;
    cfg.encoder.dropout_p = 0.0;
    cfg.decoder.num_groups = 7;
    cfg.decoder.num_classes = 7;
    cfg.decoder.query_dim = 16;
    cfg.decoder.ffn_hidden = 32;
    cfg.decoder.query_seed = 0;
    return cfg;
}

ModelConfig full_model_config() {
    // Reference scale: 40 encoder layers over 768x1024 inputs. Requires an
    // external weight archive to be useful; never instantiated by the tests.
    ModelConfig cfg;
    cfg.encoder.image_height = 1024;
    cfg.encoder.image_width = 768;
    cfg.encoder.patch_size = 16;
    cfg.encoder.embed_dim = 1536;
    cfg.encoder.num_layers = 40;
    cfg.encoder.num_heads = 24;
    cfg.encoder.mlp_ratio = 4.0;
    cfg.encoder.dropout_p = 0.0;
    cfg.decoder.num_groups = 7;
    cfg.decoder.num_classes = 7;
    cfg.decoder.query_dim = 0;  // match embed_dim
    cfg.decoder.ffn_hidden = 0; // 2 * query_dim
    cfg.decoder.query_seed = 0;
    return cfg;
}

ParamCounts count_params(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.encoder.embed_dim;
    const std::size_t p = cfg.encoder.patch_size;
    const std::size_t f = cfg.encoder.ffn_dim();
    const std::size_t n = cfg.encoder.tokens();
    const std::size_t dq = cfg.resolved_query_dim();
    const std::size_t fh = cfg.resolved_ffn_hidden();
    const std::size_t g = cfg.decoder.num_groups;
    const std::size_t fac = cfg.decoder.group_factor();

    ParamCounts counts;
    const std::size_t per_layer = 2 * d          // ln1
                                  + d * 3 * d + 3 * d // qkv
                                  + d * d + d    // attn out
                                  + 2 * d        // ln2
                                  + d * f + f    // ffn1
                                  + f * d + d;   // ffn2
    counts.encoder = (3 * p * p * d + d) // patch projection
                     + n * d             // positional table
                     + cfg.encoder.num_layers * per_layer;
    counts.decoder = (dq * dq + dq)      // q projection
                     + (d * dq + dq)     // k projection
                     + (d * dq + dq)     // v projection
                     + (dq * dq + dq)    // attn out
                     + 2 * dq            // norm1
                     + (dq * fh + fh)    // ffn1
                     + (fh * dq + dq)    // ffn2
                     + 2 * dq            // norm2
                     + g * (dq * fac + fac); // group fully connected pooling
    counts.fixed_queries = g * dq;
    return counts;
}

Tensor init_group_queries(const DecoderConfig& cfg, std::size_t query_dim) {
    Rng rng(cfg.query_seed);
    Tensor q({cfg.num_groups, query_dim});
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.normal();
    return q;
}

Tensor resize_pos_grid(const Tensor& pos, std::size_t th, std::size_t tw, std::size_t out_th,
                       std::size_t out_tw) {
    if (pos.rank() != 2 || pos.dim(0) != th * tw)
        raise(Errc::shape_mismatch, "positional table shape does not match token grid");
    const std::size_t d = pos.dim(1);
    if (th == out_th && tw == out_tw) return pos;

    Tensor out({out_th * out_tw, d});
    auto src_coord = [](std::size_t dst, std::size_t out_n, std::size_t in_n) {
        if (in_n == 1) return 0.0;
        const double scale = double(in_n) / double(out_n);
        return std::clamp((double(dst) + 0.5) * scale - 0.5, 0.0, double(in_n - 1));
    };
    for (std::size_t y = 0; y < out_th; ++y) {
        const double sy = src_coord(y, out_th, th);
        const std::size_t y0 = std::size_t(sy), y1 = std::min(y0 + 1, th - 1);
        const double fy = sy - double(y0);
        for (std::size_t x = 0; x < out_tw; ++x) {
            const double sx = src_coord(x, out_tw, tw);
            const std::size_t x0 = std::size_t(sx), x1 = std::min(x0 + 1, tw - 1);
            const double fx = sx - double(x0);
            for (std::size_t c = 0; c < d; ++c) {
                const double a = pos[(y0 * tw + x0) * d + c];
                const double b = pos[(y0 * tw + x1) * d + c];
                const double e = pos[(y1 * tw + x0) * d + c];
                const double f = pos[(y1 * tw + x1) * d + c];
                const double top = a + fx * (b - a);
                const double bot = e + fx * (f - e);
                out[(y * out_tw + x) * d + c] = top + fy * (bot - top);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Parameter& Model::add_param(const std::string& name, Tensor value, bool trainable) {
    index_[name] = params_.size();
    params_.emplace_back(name, std::move(value), trainable);
    return params_.back();
}

Model::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t d = cfg_.encoder.embed_dim;
    const std::size_t p = cfg_.encoder.patch_size;
    const std::size_t f = cfg_.encoder.ffn_dim();
    const std::size_t n = cfg_.encoder.tokens();
    const std::size_t dq = cfg_.resolved_query_dim();
    const std::size_t fh = cfg_.resolved_ffn_hidden();
    const std::size_t g = cfg_.decoder.num_groups;
    const std::size_t fac = cfg_.decoder.group_factor();

    const ParamCounts counts = count_params(cfg_);
    params_.reserve(14 + 12 * cfg_.encoder.num_layers + 2 * g + 3);
    (void)counts;

    Rng rng(init_seed);
    auto normal_init = [&rng](Tensor t, double stddev) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
        return t;
    };

    add_param("encoder.patch.w", normal_init(Tensor({3 * p * p, d}), 0.02));
    add_param("encoder.patch.b", Tensor({d}));
    add_param("encoder.pos", normal_init(Tensor({n, d}), 0.02));

    for (std::size_t i = 0; i < cfg_.encoder.num_layers; ++i) {
        const std::string pre = "encoder.layer" + std::to_string(i) + ".";
        add_param(pre + "ln1.g", Tensor({d}, 1.0));
        add_param(pre + "ln1.b", Tensor({d}));
        add_param(pre + "qkv.w", normal_init(Tensor({d, 3 * d}), 0.02));
        add_param(pre + "qkv.b", Tensor({3 * d}));
        add_param(pre + "out.w", normal_init(Tensor({d, d}), 0.02));
        add_param(pre + "out.b", Tensor({d}));
        add_param(pre + "ln2.g", Tensor({d}, 1.0));
        add_param(pre + "ln2.b", Tensor({d}));
        add_param(pre + "ffn1.w", normal_init(Tensor({d, f}), 0.02));
        add_param(pre + "ffn1.b", Tensor({f}));
        add_param(pre + "ffn2.w", normal_init(Tensor({f, d}), 0.02));
        add_param(pre + "ffn2.b", Tensor({d}));
    }

    add_param("decoder.attn.q.w", normal_init(Tensor({dq, dq}), 0.02));
    add_param("decoder.attn.q.b", Tensor({dq}));
    add_param("decoder.attn.k.w", normal_init(Tensor({d, dq}), 0.02));
    add_param("decoder.attn.k.b", Tensor({dq}));
    add_param("decoder.attn.v.w", normal_init(Tensor({d, dq}), 0.02));
    add_param("decoder.attn.v.b", Tensor({dq}));
    add_param("decoder.attn.out.w", normal_init(Tensor({dq, dq}), 0.02));
    add_param("decoder.attn.out.b", Tensor({dq}));
    add_param("decoder.norm1.g", Tensor({dq}, 1.0));
    add_param("decoder.norm1.b", Tensor({dq}));
    add_param("decoder.ffn1.w", normal_init(Tensor({dq, fh}), 0.02));
    add_param("decoder.ffn1.b", Tensor({fh}));
    add_param("decoder.ffn2.w", normal_init(Tensor({fh, dq}), 0.02));
    add_param("decoder.ffn2.b", Tensor({dq}));
    add_param("decoder.norm2.g", Tensor({dq}, 1.0));
    add_param("decoder.norm2.b", Tensor({dq}));
    for (std::size_t gi = 0; gi < g; ++gi) {
        const std::string pre = "decoder.group_fc" + std::to_string(gi) + ".";
        add_param(pre + "w", normal_init(Tensor({dq, fac}), 0.02));
        add_param(pre + "b", Tensor({fac}));
    }
    // Fixed queries: drawn under their own seed and excluded from training.
    add_param("decoder.queries", init_group_queries(cfg_.decoder, dq), /*trainable=*/false);
}

Parameter& Model::find(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) raise(Errc::missing_parameter, "no parameter named " + name);
    return params_[it->second];
}

const Parameter& Model::group_queries() const {
    return params_[index_.at("decoder.queries")];
}

std::vector<Parameter*> Model::encoder_trainable(std::size_t freeze_layers) {
    std::vector<Parameter*> out;
    for (Parameter& p : params_) {
        if (!p.trainable || p.name.rfind("encoder.", 0) != 0) continue;
        if (freeze_layers > 0) {
            if (p.name == "encoder.patch.w" || p.name == "encoder.patch.b" ||
                p.name == "encoder.pos")
                continue;
            const auto layer_pos = p.name.find(".layer");
            if (layer_pos != std::string::npos) {
                const std::size_t layer = std::stoul(p.name.substr(layer_pos + 6));
                if (layer < freeze_layers) continue;
            }
        }
        out.push_back(&p);
    }
    return out;
}

std::vector<Parameter*> Model::decoder_trainable() {
    std::vector<Parameter*> out;
    for (Parameter& p : params_)
        if (p.trainable && p.name.rfind("decoder.", 0) == 0) out.push_back(&p);
    return out;
}

void Model::zero_grads() {
    for (Parameter& p : params_) p.zero_grad();
}

std::size_t Model::trainable_param_count() const {
    std::size_t n = 0;
    for (const Parameter& p : params_)
        if (p.trainable) n += p.value.size();
    return n;
}

Tensor Model::extract_patches(const std::vector<ImageTensor>& images) const {
    const std::size_t H = cfg_.encoder.image_height, W = cfg_.encoder.image_width;
    const std::size_t p = cfg_.encoder.patch_size;
    const std::size_t n = cfg_.encoder.tokens();
    const std::size_t tw = cfg_.encoder.tokens_w();

    Tensor patches({images.size() * n, 3 * p * p});
    for (std::size_t b = 0; b < images.size(); ++b) {
        const ImageTensor& img = images[b];
        if (img.channels != 3 || img.height != H || img.width != W)
            raise(Errc::dimension_mismatch,
                  "image " + std::to_string(b) + " is " + std::to_string(img.channels) + "x" +
                      std::to_string(img.height) + "x" + std::to_string(img.width) +
                      ", model expects 3x" + std::to_string(H) + "x" + std::to_string(W));
        if (img.range != ValueRange::normalized)
            raise(Errc::range_error, "model input must be normalized");
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t ty = t / tw, tx = t % tw;
            double* row = patches.data() + (b * n + t) * 3 * p * p;
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t py = 0; py < p; ++py)
                    for (std::size_t px = 0; px < p; ++px)
                        row[(c * p + py) * p + px] =
                            static_cast<double>(img.at(c, ty * p + py, tx * p + px));
        }
    }
    return patches;
}

ad::Val Model::encoder_forward(ad::Builder& b, ad::Val tokens, ForwardTrace* trace) {
    const std::size_t B = tokens.shape()[0];
    const std::size_t N = tokens.shape()[1];
    const std::size_t d = cfg_.encoder.embed_dim;
    const std::size_t heads = cfg_.encoder.num_heads;
    const double attn_scale = 1.0 / std::sqrt(double(cfg_.encoder.head_dim()));

    ad::Val x = tokens;
    for (std::size_t i = 0; i < cfg_.encoder.num_layers; ++i) {
        const std::string pre = "encoder.layer" + std::to_string(i) + ".";

        // Pre-norm self-attention block.
        ad::Val h = b.layernorm(x, b.param(find(pre + "ln1.g")), b.param(find(pre + "ln1.b")));
        ad::Val qkv = b.add_bias(
            b.matmul(b.reshape(h, {B * N, d}), b.param(find(pre + "qkv.w"))),
            b.param(find(pre + "qkv.b")));
        ad::Val q = b.split_heads(b.reshape(b.slice_lastdim(qkv, 0, d), {B, N, d}), heads);
        ad::Val k = b.split_heads(b.reshape(b.slice_lastdim(qkv, d, d), {B, N, d}), heads);
        ad::Val v = b.split_heads(b.reshape(b.slice_lastdim(qkv, 2 * d, d), {B, N, d}), heads);

        ad::Val scores = b.scale(b.bmm(q, b.transpose_last2(k)), attn_scale);
        ad::Val attn = b.softmax_lastdim(scores);
        if (trace) trace->encoder_attn.push_back(attn.value());

        ad::Val ctx = b.merge_heads(b.bmm(attn, v), heads);
        ad::Val attn_out = b.add_bias(
            b.matmul(b.reshape(ctx, {B * N, d}), b.param(find(pre + "out.w"))),
            b.param(find(pre + "out.b")));
        x = b.add(x, b.reshape(attn_out, {B, N, d}));

        // Pre-norm FFN block.
        ad::Val h2 = b.layernorm(x, b.param(find(pre + "ln2.g")), b.param(find(pre + "ln2.b")));
        ad::Val f1 = b.gelu(b.add_bias(
            b.matmul(b.reshape(h2, {B * N, d}), b.param(find(pre + "ffn1.w"))),
            b.param(find(pre + "ffn1.b"))));
        ad::Val f2 = b.add_bias(b.matmul(f1, b.param(find(pre + "ffn2.w"))),
                                b.param(find(pre + "ffn2.b")));
        x = b.add(x, b.reshape(f2, {B, N, d}));
    }
    return x;
}

ad::Val Model::decoder_forward(ad::Builder& b, ad::Val tokens, ForwardTrace* trace) {
    const std::size_t B = tokens.shape()[0];
    const std::size_t N = tokens.shape()[1];
    const std::size_t d = cfg_.encoder.embed_dim;
    const std::size_t dq = cfg_.resolved_query_dim();
    const std::size_t g = cfg_.decoder.num_groups;
    const std::size_t fac = cfg_.decoder.group_factor();
    const double attn_scale = 1.0 / std::sqrt(double(dq));

    // Cross-attention: projected fixed queries attend over projected tokens.
    // There is intentionally no self-attention among the queries.
    ad::Val q0 = b.param(find("decoder.queries"));
    ad::Val qp = b.add_bias(b.matmul(q0, b.param(find("decoder.attn.q.w"))),
                            b.param(find("decoder.attn.q.b")));
    ad::Val qb = b.expand_batch(qp, B);

    ad::Val keys = b.reshape(
        b.add_bias(b.matmul(b.reshape(tokens, {B * N, d}), b.param(find("decoder.attn.k.w"))),
                   b.param(find("decoder.attn.k.b"))),
        {B, N, dq});
    ad::Val values = b.reshape(
        b.add_bias(b.matmul(b.reshape(tokens, {B * N, d}), b.param(find("decoder.attn.v.w"))),
                   b.param(find("decoder.attn.v.b"))),
        {B, N, dq});

    ad::Val scores = b.scale(b.bmm(qb, b.transpose_last2(keys)), attn_scale);
    ad::Val attn = b.softmax_lastdim(scores); // (B, G, N)
    ad::Val ctx = b.bmm(attn, values);        // (B, G, Dq)
    if (trace) {
        trace->decoder_attn = attn.value();
        trace->decoder_context = ctx.value();
        trace->decoder_values = values.value();
    }

    ad::Val attn_out = b.reshape(
        b.add_bias(b.matmul(b.reshape(ctx, {B * g, dq}), b.param(find("decoder.attn.out.w"))),
                   b.param(find("decoder.attn.out.b"))),
        {B, g, dq});

    // Residual over the raw (unprojected) queries, then post-norm.
    ad::Val t1 = b.layernorm(b.add(b.expand_batch(q0, B), attn_out),
                             b.param(find("decoder.norm1.g")), b.param(find("decoder.norm1.b")));

    ad::Val f1 = b.gelu(b.add_bias(
        b.matmul(b.reshape(t1, {B * g, dq}), b.param(find("decoder.ffn1.w"))),
        b.param(find("decoder.ffn1.b"))));
    ad::Val f2 = b.add_bias(b.matmul(f1, b.param(find("decoder.ffn2.w"))),
                            b.param(find("decoder.ffn2.b")));
    ad::Val t2 = b.layernorm(b.add(t1, b.reshape(f2, {B, g, dq})),
                             b.param(find("decoder.norm2.g")), b.param(find("decoder.norm2.b")));

    // Group fully connected pooling: each group's embedding maps to its own
    // slice of logits; concatenation truncated to num_classes.
    std::vector<ad::Val> parts;
    parts.reserve(g);
    for (std::size_t gi = 0; gi < g; ++gi) {
        const std::string pre = "decoder.group_fc" + std::to_string(gi) + ".";
        parts.push_back(b.add_bias(b.matmul(b.select_mid(t2, gi), b.param(find(pre + "w"))),
                                   b.param(find(pre + "b"))));
    }
    ad::Val logits = b.concat_lastdim(parts);
    if (g * fac != cfg_.decoder.num_classes)
        logits = b.slice_lastdim(logits, 0, cfg_.decoder.num_classes);
    return logits;
}

ad::Val Model::forward(ad::Builder& b, const std::vector<ImageTensor>& images, bool training,
                       Rng& dropout_rng, ForwardTrace* trace) {
    if (images.empty()) raise(Errc::dimension_mismatch, "empty batch");
    const std::size_t B = images.size();
    const std::size_t N = cfg_.encoder.tokens();
    const std::size_t d = cfg_.encoder.embed_dim;

    ad::Val patches = b.constant(extract_patches(images));
    ad::Val tok = b.add_bias(b.matmul(patches, b.param(find("encoder.patch.w"))),
                             b.param(find("encoder.patch.b")));
    ad::Val x = b.add(b.reshape(tok, {B, N, d}), b.expand_batch(b.param(find("encoder.pos")), B));
    x = b.dropout(x, cfg_.encoder.dropout_p, dropout_rng, training);
    x = encoder_forward(b, x, trace);
    return decoder_forward(b, x, trace);
}

Tensor Model::forward_logits(const std::vector<ImageTensor>& images, ForwardTrace* trace) {
    ad::Builder b;
    Rng unused(0);
    return forward(b, images, /*training=*/false, unused, trace).value();
}

std::string Model::describe() const {
    const ParamCounts counts = count_params(cfg_);
    std::ostringstream oss;
    oss << "encoder: " << cfg_.encoder.num_layers << " transformer layers, embed_dim "
        << cfg_.encoder.embed_dim << ", " << cfg_.encoder.num_heads << " heads, patch "
        << cfg_.encoder.patch_size << ", input 3x" << cfg_.encoder.image_height << "x"
        << cfg_.encoder.image_width << " (" << cfg_.encoder.tokens() << " tokens), dropout "
        << cfg_.encoder.dropout_p << "\n";
    oss << "decoder: " << cfg_.decoder.num_groups << " fixed group queries (dim "
        << cfg_.resolved_query_dim() << ", seed " << cfg_.decoder.query_seed
        << "), group factor " << cfg_.decoder.group_factor() << ", ffn_hidden "
        << cfg_.resolved_ffn_hidden() << ", " << cfg_.decoder.num_classes << " classes\n";
    oss << "parameters: encoder " << counts.encoder << ", decoder " << counts.decoder
        << ", trainable " << counts.trainable() << ", fixed queries " << counts.fixed_queries
        << "\n";
    return oss.str();
}

std::map<std::string, Tensor> Model::snapshot() const {
    std::map<std::string, Tensor> out;
    for (const Parameter& p : params_) out[p.name] = p.value;
    return out;
}

void Model::restore(const std::map<std::string, Tensor>& values) {
    for (Parameter& p : params_) {
        const auto it = values.find(p.name);
        if (it == values.end()) raise(Errc::missing_parameter, "snapshot missing " + p.name);
        if (!it->second.same_shape(p.value))
            raise(Errc::shape_mismatch, "snapshot shape mismatch for " + p.name);
        p.value = it->second;
    }
}

namespace {

json config_to_json(const ModelConfig& cfg) {
    return json{{"encoder",
                 {{"image_height", cfg.encoder.image_height},
                  {"image_width", cfg.encoder.image_width},
                  {"patch_size", cfg.encoder.patch_size},
                  {"embed_dim", cfg.encoder.embed_dim},
                  {"num_layers", cfg.encoder.num_layers},
                  {"num_heads", cfg.encoder.num_heads},
                  {"mlp_ratio", cfg.encoder.mlp_ratio},
                  {"dropout_p", cfg.encoder.dropout_p}}},
                {"decoder",
                 {{"num_groups", cfg.decoder.num_groups},
                  {"num_classes", cfg.decoder.num_classes},
                  {"query_dim", cfg.decoder.query_dim},
                  {"ffn_hidden", cfg.decoder.ffn_hidden},
                  {"query_seed", cfg.decoder.query_seed}}}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    const json& e = j.at("encoder");
    cfg.encoder.image_height = e.at("image_height").get<std::size_t>();
    cfg.encoder.image_width = e.at("image_width").get<std::size_t>();
    cfg.encoder.patch_size = e.at("patch_size").get<std::size_t>();
    cfg.encoder.embed_dim = e.at("embed_dim").get<std::size_t>();
    cfg.encoder.num_layers = e.at("num_layers").get<std::size_t>();
    cfg.encoder.num_heads = e.at("num_heads").get<std::size_t>();
    cfg.encoder.mlp_ratio = e.at("mlp_ratio").get<double>();
    cfg.encoder.dropout_p = e.at("dropout_p").get<double>();
    const json& d = j.at("decoder");
    cfg.decoder.num_groups = d.at("num_groups").get<std::size_t>();
    cfg.decoder.num_classes = d.at("num_classes").get<std::size_t>();
    cfg.decoder.query_dim = d.at("query_dim").get<std::size_t>();
    cfg.decoder.ffn_hidden = d.at("ffn_hidden").get<std::size_t>();
    cfg.decoder.query_seed = d.at("query_seed").get<std::uint64_t>();
    return cfg;
}

} // namespace

void Model::save(const std::string& path) const {
    std::vector<ArchiveEntry> entries;
    entries.reserve(params_.size() + 1);
    entries.push_back(ArchiveEntry::blob("__model_config__", config_to_json(cfg_).dump()));
    for (const Parameter& p : params_) {
        if (p.name == "encoder.pos") {
            // Store the positional table on its token grid so a loader can
            // resize it for a different input resolution.
            Tensor grid({cfg_.encoder.tokens_h(), cfg_.encoder.tokens_w(),
                         cfg_.encoder.embed_dim});
            std::copy(p.value.data(), p.value.data() + p.value.size(), grid.data());
            entries.push_back(ArchiveEntry::tensor(p.name, std::move(grid)));
        } else {
            entries.push_back(ArchiveEntry::tensor(p.name, p.value));
        }
    }
    save_archive(path, entries);
}

Model Model::load_file(const std::string& path) {
    const auto entries = load_archive(path);
    const ArchiveEntry* cfg_entry = find_entry(entries, "__model_config__");
    if (!cfg_entry) raise(Errc::format_error, "archive has no embedded model config: " + path);
    Model model(config_from_json(json::parse(cfg_entry->text())));
    for (Parameter& p : model.params_) {
        const ArchiveEntry* e = find_entry(entries, p.name);
        if (!e) raise(Errc::missing_parameter, "archive missing parameter " + p.name);
        if (shape_numel(e->shape) != p.value.size())
            raise(Errc::shape_mismatch, "archive shape mismatch for " + p.name);
        std::copy(e->numeric.data(), e->numeric.data() + e->numeric.size(), p.value.data());
    }
    return model;
}

void Model::load_backbone_weights(const std::string& path) {
    const auto entries = load_archive(path);

    std::vector<std::string> missing;
    std::vector<std::string> mismatched;
    for (Parameter& p : params_) {
        if (p.name.rfind("encoder.", 0) != 0) continue;
        const ArchiveEntry* e = find_entry(entries, p.name);
        if (!e) {
            missing.push_back(p.name);
            continue;
        }
        if (p.name == "encoder.pos") {
            if (e->shape.size() == 3 && e->shape[2] == cfg_.encoder.embed_dim) continue;
            if (e->shape.size() == 2 && e->shape[1] == cfg_.encoder.embed_dim &&
                e->shape[0] == cfg_.encoder.tokens())
                continue;
            mismatched.push_back(p.name + " file" + Tensor(e->shape).shape_str() + " model" +
                                 p.value.shape_str());
        } else if (e->shape != p.value.shape()) {
            mismatched.push_back(p.name + " file" + Tensor(e->shape).shape_str() + " model" +
                                 p.value.shape_str());
        }
    }
    if (!mismatched.empty()) {
        std::string report = "backbone weight shapes incompatible:";
        for (const std::string& s : mismatched) report += "\n  " + s;
        raise(Errc::shape_mismatch, report);
    }
    if (!missing.empty()) {
        std::string report = "backbone archive missing encoder parameters:";
        for (const std::string& s : missing) report += "\n  " + s;
        raise(Errc::missing_parameter, report);
    }

    for (Parameter& p : params_) {
        if (p.name.rfind("encoder.", 0) != 0) continue;
        const ArchiveEntry* e = find_entry(entries, p.name);
        if (p.name == "encoder.pos" && e->shape.size() == 3) {
            Tensor flat({e->shape[0] * e->shape[1], e->shape[2]});
            std::copy(e->numeric.data(), e->numeric.data() + e->numeric.size(), flat.data());
            p.value = resize_pos_grid(flat, e->shape[0], e->shape[1], cfg_.encoder.tokens_h(),
                                      cfg_.encoder.tokens_w());
        } else {
            std::copy(e->numeric.data(), e->numeric.data() + e->numeric.size(), p.value.data());
        }
        p.zero_grad();
    }
}

} // namespace fervit
