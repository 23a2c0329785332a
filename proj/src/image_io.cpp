#include "gdq/image_io.hpp"

#include "gdq/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace gdq {
namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

Image8 read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());

    std::string message;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed for " + path.string());
    }

    Image8 image;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode error in " + path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported bit depth 16 in " + path.string());
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    image.width = png_get_image_width(png, info);
    image.height = png_get_image_height(png, info);
    image.channels = png_get_channels(png, info);
    if (image.channels != 1 && image.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel layout in " + path.string());
    }
    image.pixels.resize(image.width * image.height * image.channels);
    rows.resize(image.height);
    for (std::size_t y = 0; y < image.height; ++y) {
        rows[y] = image.pixels.data() + y * image.width * image.channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot create " + path.string());

    std::string message;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed for " + path.string());
    }
    std::vector<png_bytep> rows(image.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode error in " + path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width * image.channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!token.empty()) break;
        } else {
            token.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return token;
}

Image8 read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string magic = next_token(in);
    Image8 image;
    if (magic == "P5") {
        image.channels = 1;
    } else if (magic == "P6") {
        image.channels = 3;
    } else {
        throw IoError("unsupported netpbm variant '" + magic + "' in " + path.string());
    }
    try {
        image.width = std::stoul(next_token(in));
        image.height = std::stoul(next_token(in));
        const unsigned long maxval = std::stoul(next_token(in));
        if (maxval != 255) {
            throw IoError("unsupported bit depth (maxval " + std::to_string(maxval) + ") in " +
                          path.string());
        }
    } catch (const std::logic_error&) {
        throw IoError("malformed netpbm header in " + path.string());
    }
    image.pixels.resize(image.width * image.height * image.channels);
    in.read(reinterpret_cast<char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
        throw IoError("truncated pixel data in " + path.string());
    }
    return image;
}

void write_pnm(const std::filesystem::path& path, const Image8& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out << (image.channels == 1 ? "P5" : "P6") << '\n'
        << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace

Image8 read_image8(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), sizeof sig);
    const auto got = static_cast<std::size_t>(probe.gcount());
    probe.close();
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
    if (got >= 2 && sig[0] == 'P') return read_pnm(path);
    throw IoError("unrecognised image format: " + path.string());
}

void write_image8(const std::filesystem::path& path, const Image8& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw ContractError("images must have 1 or 3 channels");
    }
    if (image.pixels.size() != image.width * image.height * image.channels) {
        throw ContractError("image pixel buffer does not match its geometry");
    }
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        write_png(path, image);
    } else if (ext == ".pgm" || ext == ".ppm") {
        if ((ext == ".pgm") != (image.channels == 1)) {
            throw ContractError("channel count does not fit extension " + ext);
        }
        write_pnm(path, image);
    } else {
        throw IoError("unsupported output extension '" + ext + "' for " + path.string());
    }
}

Tensor image_to_tensor(const Image8& image) {
    Tensor t(1, image.channels, image.height, image.width);
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            for (std::size_t c = 0; c < image.channels; ++c) {
                const auto byte = image.pixels[(y * image.width + x) * image.channels + c];
                t(0, c, y, x) = static_cast<float>(byte) / 255.0f;
            }
        }
    }
    return t;
}

Image8 tensor_to_image(const Tensor& t) {
    if (t.batch() != 1 || (t.channels() != 1 && t.channels() != 3)) {
        throw ContractError("image export needs a (1, 1|3, H, W) tensor");
    }
    Image8 image{t.width(), t.height(), t.channels(), {}};
    image.pixels.resize(t.size());
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            for (std::size_t c = 0; c < image.channels; ++c) {
                const float v = std::clamp(t(0, c, y, x), 0.0f, 1.0f);
                image.pixels[(y * image.width + x) * image.channels + c] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
    return image;
}

Tensor load_image(const std::filesystem::path& path) { return image_to_tensor(read_image8(path)); }

void save_image(const std::filesystem::path& path, const Tensor& t) {
    write_image8(path, tensor_to_image(t));
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower_ext(entry.path());
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace gdq
