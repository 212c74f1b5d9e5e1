#include "hierfed/models/embedding_export.hpp"

#include <ostream>

#include <fmt/format.h>

#include "hierfed/errors.hpp"

namespace hierfed::models {

void write_embeddings_csv(std::span<const EmbeddingRow> rows, int k, std::ostream& out) {
    std::string buf = "student_id,course,demographic_variable,subgroup";
    for (int d = 0; d < k; ++d) buf += fmt::format(",dim_{}", d);
    buf += '\n';
    for (const auto& r : rows) {
        if (r.values.size() != k) {
            throw ShapeError(fmt::format("embedding for {} has {} dims, expected {}", r.student_id,
                                         r.values.size(), k));
        }
        buf += fmt::format("{},{},{},{}", r.student_id, r.course, r.demographic_variable,
                           r.subgroup);
        for (Eigen::Index d = 0; d < k; ++d) buf += fmt::format(",{}", r.values[d]);
        buf += '\n';
    }
    out << buf;
}

}  // namespace hierfed::models
