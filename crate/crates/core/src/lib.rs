pub mod codec;
pub mod fec;
pub mod geometry;
pub mod model;
pub mod scene;
pub mod session;
pub mod transport;
pub mod viewer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/depth-codec.md")]
    mod depth_codec {}
    #[doc = include_str!("../../../book/src/color-codec.md")]
    mod color_codec {}
    #[doc = include_str!("../../../book/src/fountain-code.md")]
    mod fountain_code {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/viewer.md")]
    mod viewer {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/wire-formats.md")]
    mod wire_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
