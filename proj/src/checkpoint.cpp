#include "ddcp/checkpoint.hpp"

#include <fstream>

#include "binio.hpp"
#include "ddcp/errors.hpp"

namespace ddcp {

using nlohmann::json;

void save_ddck(const std::string& path, json header, const ParameterSet& params) {
    json tensors = json::array();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Param& p = params[i];
        tensors.push_back({{"name", p.name}, {"shape", p.value.shape}});
    }
    header["tensors"] = std::move(tensors);
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    binio::write_bytes(os, "DDCK", 4);
    binio::write_u32(os, 1);
    binio::write_u32(os, static_cast<std::uint32_t>(text.size()));
    binio::write_bytes(os, text.data(), text.size());
    std::vector<float> block;
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Param& p = params[i];
        block.assign(p.value.v.begin(), p.value.v.end());
        binio::write_f32_block(os, block);
    }
    os.flush();
    if (!os) throw FormatError("write failure: " + path);
}

json load_ddck(const std::string& path, ParameterSet& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);

    binio::check_magic(is, "DDCK", "DDCK");
    if (binio::read_u32(is, "version") != 1) throw FormatError("unsupported DDCK version");
    const std::uint32_t header_len = binio::read_u32(is, "header length");
    std::string text(header_len, '\0');
    binio::read_bytes(is, text.data(), header_len, "header");

    json header = json::parse(text, nullptr, false);
    if (header.is_discarded()) throw FormatError("DDCK header is not valid JSON: " + path);
    if (!header.contains("tensors") || !header["tensors"].is_array())
        throw FormatError("DDCK header lacks a tensor table: " + path);

    for (const auto& entry : header["tensors"]) {
        const std::string name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape.empty() || shape.size() > 2)
            throw FormatError("DDCK tensor " + name + " has unsupported rank");
        Tensor t = shape.size() == 1 ? Tensor::vector(shape[0]) : Tensor::matrix(shape[0], shape[1]);
        std::vector<float> block(t.size());
        binio::read_f32_block(is, block, name.c_str());
        for (std::size_t i = 0; i < block.size(); ++i) t.v[i] = static_cast<double>(block[i]);
        params.add(name, std::move(t));
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after last tensor block: " + path);
    return header;
}

}  // namespace ddcp
