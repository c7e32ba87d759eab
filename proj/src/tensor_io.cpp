#include "gctx/tensor_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gctx {

void write_tensor_text(const Tensor& t, std::ostream& os) {
    os << "tensor v1 " << t.rank();
    for (int i = 0; i < t.rank(); ++i) os << " " << t.dim(i);
    os << "\n";
    char buf[64];
    const double* p = t.data();
    for (int64_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", p[i]);
        os << buf << ((i + 1) % 8 == 0 ? "\n" : " ");
    }
    if (t.size() % 8 != 0) os << "\n";
}

void write_tensor_file(const Tensor& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_tensor_text(t, os);
    if (!os) throw IoError("write failed for " + path);
}

Tensor read_tensor_text(std::istream& is) {
    std::string magic, version;
    if (!(is >> magic >> version) || magic != "tensor" || version != "v1")
        throw IoError("bad tensor header: expected `tensor v1`");
    int rank = -1;
    if (!(is >> rank) || rank < 0 || rank > 8)
        throw IoError("bad tensor header: invalid rank");
    Shape shape(size_t(rank), 0);
    for (int i = 0; i < rank; ++i) {
        if (!(is >> shape[size_t(i)]) || shape[size_t(i)] <= 0)
            throw IoError("bad tensor header: invalid dimension " + std::to_string(i));
    }
    int64_t n = rank == 0 ? 1 : shape_numel(shape);
    if (rank == 0) shape = {1};
    std::vector<double> values(size_t(n), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        if (!(is >> values[size_t(i)]))
            throw IoError("tensor parse error at value index " + std::to_string(i) + " of " +
                          std::to_string(n));
    }
    return Tensor(shape, std::move(values));
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    try {
        return read_tensor_text(is);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace gctx
