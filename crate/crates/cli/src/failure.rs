use qntk_core::Error;

/// Failed verification, and any runtime failure without a more specific code.
pub const VERIFY_FAILED: u8 = 1;
pub const BAD_INPUT: u8 = 2;
pub const PRECONDITION: u8 = 3;
pub const NOT_INVERTIBLE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    /// Errors raised while reading circuits, datasets or query strings.
    pub fn input(e: Error) -> Self {
        Self::new(BAD_INPUT, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition { .. } => PRECONDITION,
            Error::NotInvertible(_) => NOT_INVERTIBLE,
            Error::Parse { .. } | Error::Io(_) => BAD_INPUT,
            Error::InputLength { .. } => BAD_INPUT,
            _ => VERIFY_FAILED,
        };
        Self::new(code, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kind() {
        let p = Error::Precondition {
            bound: "0 < delta < 1",
            detail: "1.5".into(),
        };
        assert_eq!(Failure::from(p).code, PRECONDITION);
        assert_eq!(Failure::from(Error::NotInvertible("x".into())).code, NOT_INVERTIBLE);
        let parse = Error::Parse {
            line: 1,
            column: 2,
            message: "bad".into(),
        };
        assert_eq!(Failure::from(parse).code, BAD_INPUT);
        assert_eq!(Failure::input(Error::InvalidArgument("dup".into())).code, BAD_INPUT);
    }
}
