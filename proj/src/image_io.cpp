#include "photonpano/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace photonpano {

namespace {

// Reads the next PNM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) continue;
        tok.push_back(static_cast<char>(c));
        while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
            tok.push_back(static_cast<char>(in.get()));
        return tok;
    }
    raise(ErrorKind::format, "unexpected end of PNM header");
}

int parse_dim(const std::string& tok, const char* what) {
    try {
        int v = std::stoi(tok);
        if (v <= 0) raise(ErrorKind::format, std::string("non-positive PNM ") + what);
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(ErrorKind::format, std::string("bad PNM ") + what + ": " + tok);
    }
}

}  // namespace

Image8 read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    std::string magic = next_token(in);
    if (magic != "P1" && magic != "P2" && magic != "P4" && magic != "P5")
        raise(ErrorKind::format, path.string() + ": unsupported PNM type " + magic);
    const bool bitmap = (magic == "P1" || magic == "P4");
    const bool ascii = (magic == "P1" || magic == "P2");

    const int width = parse_dim(next_token(in), "width");
    const int height = parse_dim(next_token(in), "height");
    int maxval = 1;
    if (!bitmap) {
        maxval = parse_dim(next_token(in), "maxval");
        if (maxval > 255) raise(ErrorKind::format, path.string() + ": only 8-bit PGM supported");
    }

    Image8 img(width, height);
    if (ascii) {
        for (size_t i = 0; i < img.pixels.size(); ++i) {
            int v = parse_dim(next_token(in), "sample");
            img.pixels[i] = bitmap ? (v != 0 ? 255 : 0) : static_cast<uint8_t>(v);
        }
        return img;
    }

    // single whitespace byte separates header from binary raster
    in.get();
    if (bitmap) {
        const size_t row_bytes = (static_cast<size_t>(width) + 7) / 8;
        std::vector<uint8_t> row(row_bytes);
        for (int y = 0; y < height; ++y) {
            in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_bytes));
            if (!in) raise(ErrorKind::format, path.string() + ": truncated PBM raster");
            for (int x = 0; x < width; ++x)
                img.at(x, y) = (row[x >> 3] >> (7 - (x & 7))) & 1 ? 255 : 0;
        }
    } else {
        in.read(reinterpret_cast<char*>(img.pixels.data()),
                static_cast<std::streamsize>(img.pixels.size()));
        if (!in) raise(ErrorKind::format, path.string() + ": truncated PGM raster");
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const Image8& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) raise(ErrorKind::io, "short write to " + path.string());
}

namespace {

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) std::fclose(file);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file) std::fclose(file);
    }
};

}  // namespace

DecodedPng read_png(const std::filesystem::path& path) {
    PngReadCloser ctx;
    ctx.file = std::fopen(path.string().c_str(), "rb");
    if (!ctx.file) raise(ErrorKind::io, "cannot open " + path.string());

    uint8_t sig[8];
    if (std::fread(sig, 1, 8, ctx.file) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        raise(ErrorKind::format, path.string() + ": not a PNG file");

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = ctx.png ? png_create_info_struct(ctx.png) : nullptr;
    if (!ctx.png || !ctx.info) raise(ErrorKind::io, "libpng initialization failed");
    if (setjmp(png_jmpbuf(ctx.png))) raise(ErrorKind::format, path.string() + ": PNG decode error");

    png_init_io(ctx.png, ctx.file);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    png_set_strip_16(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_set_palette_to_rgb(ctx.png);
    png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    DecodedPng out;
    out.width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    out.height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    out.channels = static_cast<int>(png_get_channels(ctx.png, ctx.info));
    if (out.channels != 1 && out.channels != 3)
        raise(ErrorKind::format, path.string() + ": expected grayscale or RGB PNG");

    out.pixels.resize(static_cast<size_t>(out.width) * out.height * out.channels);
    std::vector<png_bytep> rows(static_cast<size_t>(out.height));
    const size_t stride = static_cast<size_t>(out.width) * out.channels;
    for (int y = 0; y < out.height; ++y) rows[static_cast<size_t>(y)] = out.pixels.data() + y * stride;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return out;
}

void write_png8(const std::filesystem::path& path, const Image8& image) {
    PngWriteCloser ctx;
    ctx.file = std::fopen(path.string().c_str(), "wb");
    if (!ctx.file) raise(ErrorKind::io, "cannot write " + path.string());
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = ctx.png ? png_create_info_struct(ctx.png) : nullptr;
    if (!ctx.png || !ctx.info) raise(ErrorKind::io, "libpng initialization failed");
    if (setjmp(png_jmpbuf(ctx.png))) raise(ErrorKind::io, path.string() + ": PNG encode error");

    png_init_io(ctx.png, ctx.file);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    for (int y = 0; y < image.height; ++y)
        png_write_row(ctx.png, const_cast<png_bytep>(image.pixels.data() +
                                                     static_cast<size_t>(y) * image.width));
    png_write_end(ctx.png, nullptr);
}

void write_png16(const std::filesystem::path& path, int width, int height,
                 const std::vector<uint16_t>& pixels) {
    if (pixels.size() != static_cast<size_t>(width) * height)
        raise(ErrorKind::argument, "write_png16: pixel buffer size mismatch");
    PngWriteCloser ctx;
    ctx.file = std::fopen(path.string().c_str(), "wb");
    if (!ctx.file) raise(ErrorKind::io, "cannot write " + path.string());
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = ctx.png ? png_create_info_struct(ctx.png) : nullptr;
    if (!ctx.png || !ctx.info) raise(ErrorKind::io, "libpng initialization failed");
    if (setjmp(png_jmpbuf(ctx.png))) raise(ErrorKind::io, path.string() + ": PNG encode error");

    png_init_io(ctx.png, ctx.file);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    // PNG stores 16-bit samples big-endian
    std::vector<uint8_t> row(static_cast<size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const uint16_t v = pixels[static_cast<size_t>(y) * width + x];
            row[static_cast<size_t>(x) * 2] = static_cast<uint8_t>(v >> 8);
            row[static_cast<size_t>(x) * 2 + 1] = static_cast<uint8_t>(v & 0xff);
        }
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

}  // namespace photonpano
