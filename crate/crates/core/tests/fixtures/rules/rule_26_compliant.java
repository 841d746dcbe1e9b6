public String headerOf(BufferedReader reader) {
    try {
        return reader.readLine();
    } catch (Exception e) {
        return null;
    }
}
