//! File formats behind the command-line tool.
