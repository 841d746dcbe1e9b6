public void log(PrintWriter writer, String line) {
    writer.write(line);
    writer.close();
}
