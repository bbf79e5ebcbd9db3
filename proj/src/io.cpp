#include "alt/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace alt {

namespace {

void put_bytes(std::string& buf, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) { put_bytes(buf, v, 4); }
void put_u64(std::string& buf, std::uint64_t v) { put_bytes(buf, v, 8); }
void put_f64(std::string& buf, double v) {
    put_bytes(buf, std::bit_cast<std::uint64_t>(v), 8);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint64_t bytes(int n) {
        if (pos + static_cast<std::size_t>(n) > buf.size())
            throw std::runtime_error("container: truncated file");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++]))
                 << (8 * i);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    std::uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(bytes(8)); }
    std::string str(std::size_t n) {
        if (pos + n > buf.size())
            throw std::runtime_error("container: truncated file");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kMagic[4] = {'A', 'L', 'T', 'C'};
constexpr std::size_t kMaxNameLen = 4096;
constexpr std::size_t kMaxDims = 8;
constexpr std::uint64_t kMaxElements = 1ull << 30;

} // namespace

void write_container(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kContainerVersion);
    put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        std::uint64_t count = 1;
        for (const std::uint64_t d : t.dims) count *= d;
        if (count != t.values.size())
            throw std::invalid_argument("container: tensor '" + t.name +
                                        "' dims do not match value count");
        put_u32(buf, static_cast<std::uint32_t>(t.name.size()));
        buf.append(t.name);
        put_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
        for (const std::uint64_t d : t.dims) put_u64(buf, d);
        for (const double v : t.values) put_f64(buf, v);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("container: cannot open " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("container: write failed for " + path.string());
}

std::vector<NamedTensor> read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("container: cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.str(4) != std::string(kMagic, 4))
        throw std::runtime_error("container: bad magic in " + path.string());
    const std::uint32_t version = r.u32();
    if (version != kContainerVersion)
        throw std::runtime_error("container: unsupported version " +
                                 std::to_string(version));
    const std::uint32_t count = r.u32();
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const std::uint32_t name_len = r.u32();
        if (name_len == 0 || name_len > kMaxNameLen)
            throw std::runtime_error("container: implausible tensor name length");
        t.name = r.str(name_len);
        const std::uint32_t ndims = r.u32();
        if (ndims > kMaxDims)
            throw std::runtime_error("container: too many dims for '" + t.name + "'");
        std::uint64_t elems = 1;
        for (std::uint32_t d = 0; d < ndims; ++d) {
            t.dims.push_back(r.u64());
            if (t.dims.back() == 0 || elems > kMaxElements / t.dims.back())
                throw std::runtime_error("container: implausible dims for '" +
                                         t.name + "'");
            elems *= t.dims.back();
        }
        t.values.resize(elems);
        for (std::uint64_t v = 0; v < elems; ++v) t.values[v] = r.f64();
        tensors.push_back(std::move(t));
    }
    if (r.pos != buf.size())
        throw std::runtime_error("container: trailing bytes in " + path.string());
    return tensors;
}

namespace {

NamedTensor tensor_of(const std::string& name, const Matrix& m) {
    return {name, {m.rows, m.cols}, m.data};
}

NamedTensor tensor_of(const std::string& name, const Vector& v) {
    return {name, {v.size()}, v};
}

void push_layer(std::vector<NamedTensor>& out, const std::string& prefix,
                const LinearLayer& layer) {
    out.push_back(tensor_of(prefix + ".w", layer.w));
    out.push_back(tensor_of(prefix + ".b", layer.b));
}

class TensorMap {
  public:
    explicit TensorMap(std::vector<NamedTensor> tensors) {
        for (NamedTensor& t : tensors) map_.emplace(t.name, std::move(t));
    }

    const NamedTensor& get(const std::string& name) const {
        const auto it = map_.find(name);
        if (it == map_.end())
            throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
        return it->second;
    }

    Matrix matrix(const std::string& name, std::size_t rows, std::size_t cols) const {
        const NamedTensor& t = get(name);
        if (t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols)
            throw std::runtime_error("checkpoint: dimension header mismatch for '" +
                                     name + "'");
        Matrix m(rows, cols);
        m.data = t.values;
        return m;
    }

    Vector vector(const std::string& name, std::size_t n) const {
        const NamedTensor& t = get(name);
        if (t.dims.size() != 1 || t.dims[0] != n)
            throw std::runtime_error("checkpoint: dimension header mismatch for '" +
                                     name + "'");
        return t.values;
    }

  private:
    std::map<std::string, NamedTensor> map_;
};

LinearLayer read_layer(const TensorMap& tm, const std::string& prefix,
                       std::size_t rows, std::size_t cols) {
    return {tm.matrix(prefix + ".w", rows, cols), tm.vector(prefix + ".b", rows)};
}

std::size_t meta_index(const NamedTensor& t, std::size_t i) {
    const double v = t.values[i];
    if (v < 0 || v != std::floor(v))
        throw std::runtime_error("checkpoint: non-integer field in '" + t.name + "'");
    return static_cast<std::size_t>(v);
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& opt, const CheckpointMeta& meta) {
    std::vector<NamedTensor> tensors;
    tensors.push_back({"model.meta",
                       {7},
                       {static_cast<double>(params.input_dim),
                        static_cast<double>(params.hidden_dim),
                        static_cast<double>(params.feature_dim),
                        static_cast<double>(params.bottleneck_dim),
                        static_cast<double>(params.num_classes),
                        params.backbone_lr_scale, params.head_lr_scale}});
    push_layer(tensors, "l1", params.l1);
    push_layer(tensors, "l2", params.l2);
    if (params.has_bottleneck()) push_layer(tensors, "bottleneck", params.bottleneck);
    push_layer(tensors, "classifier", params.classifier);

    tensors.push_back({"opt.meta",
                       {5},
                       {static_cast<double>(opt.t), static_cast<double>(opt.max_iter),
                        opt.lr, opt.momentum, opt.weight_decay}});
    push_layer(tensors, "vel.l1", opt.velocity.l1);
    push_layer(tensors, "vel.l2", opt.velocity.l2);
    if (params.has_bottleneck())
        push_layer(tensors, "vel.bottleneck", opt.velocity.bottleneck);
    push_layer(tensors, "vel.classifier", opt.velocity.classifier);

    write_container(path, tensors);

    std::ofstream side(path.string() + ".meta", std::ios::trunc);
    if (!side)
        throw std::runtime_error("checkpoint: cannot open sidecar for " +
                                 path.string());
    side << "seed=" << meta.seed << "\n";
    side << "config_hash=" << meta.config_hash << "\n";
    side << "iteration=" << meta.iteration << "\n";
    side << "config=" << meta.config_json << "\n";
    if (!side) throw std::runtime_error("checkpoint: sidecar write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const TensorMap tm(read_container(path));

    const NamedTensor& mm = tm.get("model.meta");
    if (mm.values.size() != 7)
        throw std::runtime_error("checkpoint: bad model.meta length");
    Checkpoint ck;
    ModelParams& p = ck.params;
    p.input_dim = meta_index(mm, 0);
    p.hidden_dim = meta_index(mm, 1);
    p.feature_dim = meta_index(mm, 2);
    p.bottleneck_dim = meta_index(mm, 3);
    p.num_classes = meta_index(mm, 4);
    p.backbone_lr_scale = mm.values[5];
    p.head_lr_scale = mm.values[6];

    p.l1 = read_layer(tm, "l1", p.hidden_dim, p.input_dim);
    p.l2 = read_layer(tm, "l2", p.feature_dim, p.hidden_dim);
    if (p.has_bottleneck())
        p.bottleneck = read_layer(tm, "bottleneck", p.bottleneck_dim, p.feature_dim);
    p.classifier = read_layer(tm, "classifier", p.num_classes, p.embedding_dim());

    const NamedTensor& om = tm.get("opt.meta");
    if (om.values.size() != 5)
        throw std::runtime_error("checkpoint: bad opt.meta length");
    OptimizerState& opt = ck.opt;
    opt.t = meta_index(om, 0);
    opt.max_iter = meta_index(om, 1);
    opt.lr = om.values[2];
    opt.momentum = om.values[3];
    opt.weight_decay = om.values[4];
    opt.velocity.l1 = read_layer(tm, "vel.l1", p.hidden_dim, p.input_dim);
    opt.velocity.l2 = read_layer(tm, "vel.l2", p.feature_dim, p.hidden_dim);
    if (p.has_bottleneck())
        opt.velocity.bottleneck =
            read_layer(tm, "vel.bottleneck", p.bottleneck_dim, p.feature_dim);
    opt.velocity.classifier =
        read_layer(tm, "vel.classifier", p.num_classes, p.embedding_dim());

    std::ifstream side(path.string() + ".meta");
    if (side) {
        std::string line;
        while (std::getline(side, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            if (key == "seed")
                ck.meta.seed = std::stoull(value);
            else if (key == "config_hash")
                ck.meta.config_hash = value;
            else if (key == "iteration")
                ck.meta.iteration = std::stoull(value);
            else if (key == "config")
                ck.meta.config_json = value;
        }
        ck.has_meta = true;
    }
    return ck;
}

void export_bank(const std::filesystem::path& path, const FeatureBank& bank) {
    const NamedTensor tensors[] = {tensor_of("bank.f", bank.f),
                                   tensor_of("bank.p", bank.p)};
    write_container(path, tensors);
}

FeatureBank import_bank(const std::filesystem::path& path) {
    const TensorMap tm(read_container(path));
    const NamedTensor& f = tm.get("bank.f");
    const NamedTensor& p = tm.get("bank.p");
    if (f.dims.size() != 2 || p.dims.size() != 2 || f.dims[0] != p.dims[0])
        throw std::runtime_error("bank: malformed dims in " + path.string());
    FeatureBank bank;
    bank.f = tm.matrix("bank.f", f.dims[0], f.dims[1]);
    bank.p = tm.matrix("bank.p", p.dims[0], p.dims[1]);
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const auto row = bank.f.row(i);
        if (std::abs(std::sqrt(dot(row, row)) - 1.0) > 1e-6)
            throw std::runtime_error("bank: feature row " + std::to_string(i) +
                                     " is not unit norm");
        double sum = 0.0;
        for (const double v : bank.p.row(i)) {
            if (v < -1e-9)
                throw std::runtime_error("bank: negative probability at row " +
                                         std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw std::runtime_error("bank: probability row " + std::to_string(i) +
                                     " does not sum to 1");
    }
    return bank;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Trim to the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("dataset csv: cannot open " + path.string());
    for (std::size_t j = 0; j < ds.inputs.cols; ++j) out << "x" << j << ",";
    out << "label,domain\n";
    for (std::size_t i = 0; i < ds.inputs.rows; ++i) {
        for (std::size_t j = 0; j < ds.inputs.cols; ++j)
            out << format_double(ds.inputs.at(i, j)) << ",";
        out << ds.labels[i] << "," << ds.domain << "\n";
    }
    if (!out) throw std::runtime_error("dataset csv: write failed");
}

} // namespace alt
