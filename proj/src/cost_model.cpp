#include "gctx/cost_model.hpp"

#include <algorithm>

#include "gctx/kernels.hpp"

namespace gctx {

const char* to_string(InsertPos p) { return p == InsertPos::after1x1 ? "after1x1" : "afterAdd"; }

const StageDesc& ArchDescriptor::stage(const std::string& sname) const {
    for (const auto& s : stages)
        if (s.name == sname) return s;
    throw ConfigError("unknown stage: " + sname);
}

namespace {

ResBlock bottleneck_block(int cin, int width, int cout, int stride, bool project) {
    ResBlock b;
    b.main = {ConvLayer{cin, width, 1, 1, 0, false},          BnLayer{width},
              ConvLayer{width, width, 3, stride, 1, false},   BnLayer{width},
              ConvLayer{width, cout, 1, 1, 0, false},         BnLayer{cout}};
    if (project)
        b.shortcut = {ConvLayer{cin, cout, 1, stride, 0, false}, BnLayer{cout}};
    return b;
}

}  // namespace

ArchDescriptor describe_resnet50(int num_classes, int input) {
    ArchDescriptor a;
    a.name = "resnet50";
    a.input_h = a.input_w = input;
    a.stem = {ConvLayer{3, 64, 7, 2, 3, false}, BnLayer{64}, PoolLayer{PoolKind::max, 3, 2, 1}};

    const int counts[4] = {3, 4, 6, 3};
    const int widths[4] = {64, 128, 256, 512};
    const char* names[4] = {"c2", "c3", "c4", "c5"};
    int cin = 64;
    for (int s = 0; s < 4; ++s) {
        StageDesc st;
        st.name = names[s];
        int width = widths[s], cout = widths[s] * 4;
        int stride = s == 0 ? 1 : 2;
        for (int b = 0; b < counts[s]; ++b) {
            st.blocks.push_back(bottleneck_block(cin, width, cout, b == 0 ? stride : 1, b == 0));
            cin = cout;
        }
        a.stages.push_back(std::move(st));
    }
    a.head = {PoolLayer{PoolKind::global_avg}, FcLayer{2048, num_classes}};
    return a;
}

std::vector<StageGeom> stage_geometry(const ArchDescriptor& arch) {
    int hw = arch.input_h;
    for (const auto& l : arch.stem) {
        if (std::holds_alternative<ConvLayer>(l)) {
            const auto& c = std::get<ConvLayer>(l);
            hw = kernels::conv_out_extent(hw, c.k, c.stride, c.pad);
        } else if (std::holds_alternative<PoolLayer>(l)) {
            const auto& p = std::get<PoolLayer>(l);
            if (p.kind != PoolKind::global_avg)
                hw = kernels::conv_out_extent(hw, p.k, p.stride, p.pad);
        }
    }
    std::vector<StageGeom> out;
    for (const auto& st : arch.stages) {
        StageGeom g;
        g.name = st.name;
        g.blocks = int(st.blocks.size());
        for (const auto& b : st.blocks)
            for (const auto& l : b.main)
                if (std::holds_alternative<ConvLayer>(l)) {
                    const auto& c = std::get<ConvLayer>(l);
                    hw = kernels::conv_out_extent(hw, c.k, c.stride, c.pad);
                    g.channels = c.cout;
                }
        g.spatial = hw;
        out.push_back(g);
    }
    return out;
}

ArchDescriptor insert_blocks(ArchDescriptor arch, const std::vector<InsertPlanItem>& plan) {
    auto geom = stage_geometry(arch);
    auto geom_of = [&](const std::string& name) -> const StageGeom& {
        for (const auto& g : geom)
            if (g.name == name) return g;
        throw ConfigError("unknown stage: " + name);
    };
    for (const auto& item : plan) {
        for (const auto& sname : item.stages) {
            const StageGeom& g = geom_of(sname);
            BlockSpec spec = item.block;
            spec.channels = g.channels;
            spec.validate();
            if (item.plus_one) {
                if (g.blocks < 2)
                    throw ConfigError("stage " + sname + " too short for a +1 insertion");
                arch.insertions.push_back({sname, g.blocks - 2, item.pos, spec});
            } else {
                for (int b = 0; b < g.blocks; ++b)
                    arch.insertions.push_back({sname, b, item.pos, spec});
            }
        }
    }
    return arch;
}

long long block_param_count(const BlockSpec& spec) {
    spec.validate();
    long long c = spec.channels;
    auto lin = [](long long in, long long out) { return in * out + out; };
    switch (spec.kind) {
        case BlockKind::nl: {
            long long ch = spec.hidden_dim();
            long long n = lin(c, ch) + lin(ch, c);  // w_v + w_z
            if (spec.variant == NlVariant::e_gaussian || spec.variant == NlVariant::dot)
                n += 2 * lin(c, ch);  // w_q + w_k
            else if (spec.variant == NlVariant::concat)
                n += lin(2 * c, 1);
            return n;
        }
        case BlockKind::snl:
            return lin(c, 1) + lin(c, c);
        case BlockKind::gc: {
            long long cr = spec.hidden_dim();
            return lin(c, 1) + lin(c, cr) + 2 * cr + lin(cr, c);
        }
        case BlockKind::se: {
            long long cr = spec.hidden_dim();
            return lin(c, cr) + lin(cr, c);
        }
        case BlockKind::framework: {
            long long n = 0;
            if (spec.pooling == Pooling::att) n += lin(c, 1);
            long long cr = spec.has_bottleneck() ? spec.hidden_dim() : 0;
            switch (spec.transform) {
                case Transform::bottleneck_ln_relu: n += lin(c, cr) + 2 * cr + lin(cr, c); break;
                case Transform::bottleneck_sigmoid: n += lin(c, cr) + lin(cr, c); break;
                case Transform::single_linear: n += lin(c, c); break;
                case Transform::none: break;
            }
            return n;
        }
    }
    throw ConfigError("unknown block kind");
}

long long block_mac_count(const BlockSpec& spec, int np) {
    spec.validate();
    long long c = spec.channels, p = np;
    switch (spec.kind) {
        case BlockKind::nl: {
            long long ch = spec.hidden_dim();
            long long transforms = 2 * p * c * ch;  // w_v and w_z over all positions
            long long attn = 0;
            switch (spec.variant) {
                case NlVariant::gaussian:
                    attn = p * p * c + p * p * ch;  // raw scores + aggregation
                    break;
                case NlVariant::e_gaussian:
                case NlVariant::dot:
                    transforms += 2 * p * c * ch;   // w_q and w_k
                    attn = 2 * p * p * ch;          // scores + aggregation
                    break;
                case NlVariant::concat:
                    attn = p * p * 2 * c + p * p * ch;  // pairwise w_q + aggregation
                    break;
            }
            return transforms + attn;
        }
        case BlockKind::snl:
            // logits + attention pooling + one CxC transform of the context
            return 2 * p * c + c * c;
        case BlockKind::gc:
            return 2 * p * c + 2 * c * c / spec.bottleneck_ratio;
        case BlockKind::se:
            // squeeze is average pooling (excluded); bottleneck matmuls only
            return 2 * c * c / spec.bottleneck_ratio;
        case BlockKind::framework: {
            long long macs = 0;
            if (spec.pooling == Pooling::att) macs += 2 * p * c;  // logits + pooling
            switch (spec.transform) {
                case Transform::bottleneck_ln_relu:
                case Transform::bottleneck_sigmoid:
                    macs += 2 * c * c / spec.bottleneck_ratio;
                    break;
                case Transform::single_linear: macs += c * c; break;
                case Transform::none: break;
            }
            return macs;
        }
    }
    throw ConfigError("unknown block kind");
}

namespace {

struct Walk {
    long long params = 0;
    long long macs = 0;
};

void count_layer(const Layer& l, int& hw, Walk& w) {
    if (std::holds_alternative<ConvLayer>(l)) {
        const auto& c = std::get<ConvLayer>(l);
        int out = kernels::conv_out_extent(hw, c.k, c.stride, c.pad);
        w.params += (long long)c.cin * c.cout * c.k * c.k + (c.bias ? c.cout : 0);
        w.macs += (long long)c.cout * out * out * c.cin * c.k * c.k;
        hw = out;
    } else if (std::holds_alternative<BnLayer>(l)) {
        w.params += 2LL * std::get<BnLayer>(l).c;
    } else if (std::holds_alternative<FcLayer>(l)) {
        const auto& f = std::get<FcLayer>(l);
        w.params += (long long)f.in * f.out + f.out;
        w.macs += (long long)f.in * f.out;
    } else {
        const auto& p = std::get<PoolLayer>(l);
        if (p.kind == PoolKind::global_avg)
            hw = 1;
        else
            hw = kernels::conv_out_extent(hw, p.k, p.stride, p.pad);
    }
}

}  // namespace

CostReport count_cost(const ArchDescriptor& arch) {
    CostReport rep;
    Walk w;
    int hw = arch.input_h;
    for (const auto& l : arch.stem) count_layer(l, hw, w);
    std::vector<std::pair<std::string, int>> stage_spatial;
    for (const auto& st : arch.stages) {
        for (const auto& b : st.blocks) {
            int hw_main = hw, hw_short = hw;
            for (const auto& l : b.main) count_layer(l, hw_main, w);
            for (const auto& l : b.shortcut) count_layer(l, hw_short, w);
            hw = hw_main;
        }
        stage_spatial.emplace_back(st.name, hw);
    }
    for (const auto& l : arch.head) count_layer(l, hw, w);
    rep.base_params = w.params;
    rep.base_macs = w.macs;

    rep.params = w.params;
    rep.macs = w.macs;
    for (const auto& ins : arch.insertions) {
        int spatial = 0;
        for (auto& [name, s] : stage_spatial)
            if (name == ins.stage) spatial = s;
        if (spatial == 0) throw ConfigError("insertion references unknown stage " + ins.stage);
        int np = spatial * spatial;
        InsertionCost ic;
        ic.label = std::string(to_string(ins.block.kind)) + "@" + ins.stage + "[" +
                   std::to_string(ins.block_index) + "] " + to_string(ins.pos);
        ic.params = block_param_count(ins.block);
        ic.macs = block_mac_count(ins.block, np);
        rep.params += ic.params;
        rep.macs += ic.macs;
        rep.per_insertion.push_back(std::move(ic));
    }
    return rep;
}

CostReport count_params(const ArchDescriptor& arch) {
    CostReport rep = count_cost(arch);
    rep.macs = rep.base_macs = 0;
    for (auto& ic : rep.per_insertion) ic.macs = 0;
    return rep;
}

CostReport count_flops(const ArchDescriptor& arch) {
    CostReport rep = count_cost(arch);
    rep.params = rep.base_params = 0;
    for (auto& ic : rep.per_insertion) ic.params = 0;
    return rep;
}

const char* CostReport::convention() {
    return "1 MAC = 1 FLOP; conv, fc and matmul MACs counted (attention logits, "
           "attention pooling and transform matmuls included); softmax, layer norm, "
           "activations, pooling windows and elementwise additions excluded; biases "
           "add parameters but no MACs";
}

}  // namespace gctx
